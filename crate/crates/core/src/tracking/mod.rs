//! Reference-to-current marker correspondence and the displacement field.

pub mod kdtree;
pub mod matching;

pub use kdtree::{nearest_brute_force, KdTree, Neighbor};
pub use matching::{match_markers, DisplacementField, MatchedPair};

use crate::error::Result;
use crate::imaging::MarkerSet;
use crate::scalar::Real;

/// Spatial index over a marker set.
pub fn build_index<T: Real>(markers: &MarkerSet<T>) -> Result<KdTree<T>> {
    KdTree::from_markers(markers)
}
