use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::geometry::Point2;
use crate::imaging::MarkerSet;
use crate::scalar::Real;
use crate::tracking::kdtree::KdTree;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair<T: Real = f64> {
    /// Index into the reference set.
    pub ref_index: usize,
    /// Index into the current set.
    pub cur_index: usize,
    /// Reference centroid.
    pub origin: Point2<T>,
    /// Current minus reference position, pixels.
    pub vector: Point2<T>,
}

impl<T: Real> MatchedPair<T> {
    pub fn current(&self) -> Point2<T> {
        self.origin + self.vector
    }
}

/// Per-marker displacement of the current frame against the reference.
///
/// Matching is injective both ways; pairs are sorted by `ref_index`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DisplacementField<T: Real = f64> {
    pub pairs: Vec<MatchedPair<T>>,
    pub unmatched_ref: Vec<usize>,
    pub unmatched_cur: Vec<usize>,
}

impl<T: Real> DisplacementField<T> {
    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    /// `[x0, y0, dx, dy]` rows.
    pub fn rows(&self) -> Vec<[T; 4]> {
        self.pairs.iter().map(|p| [p.origin.x, p.origin.y, p.vector.x, p.vector.y]).collect()
    }
}

impl<T: Real> Serialize for DisplacementField<T> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut s = serializer.serialize_struct("DisplacementField", 3)?;
        s.serialize_field("vectors", &self.rows())?;
        s.serialize_field("unmatched_ref", &self.unmatched_ref)?;
        s.serialize_field("unmatched_cur", &self.unmatched_cur)?;
        s.end()
    }
}

/// Iterated mutual-nearest-neighbor matching with a distance cap.
///
/// Each round pairs every reference marker whose nearest current marker
/// names it back as its own nearest, provided they lie within
/// `max_match_distance` pixels. Paired markers are removed and the round is
/// repeated on the remainder until no new pair forms.
pub fn match_markers<T: Real>(reference: &MarkerSet<T>, current: &MarkerSet<T>, max_match_distance: T) -> DisplacementField<T> {
    let cap2 = max_match_distance * max_match_distance;
    let mut ref_left: Vec<usize> = (0..reference.len()).filter(|&i| reference.centroids[i].is_finite()).collect();
    let mut cur_left: Vec<usize> = (0..current.len()).filter(|&j| current.centroids[j].is_finite()).collect();
    let mut pairs = Vec::new();

    while !ref_left.is_empty() && !cur_left.is_empty() {
        let ref_pts: Vec<Point2<T>> = ref_left.iter().map(|&i| reference.centroids[i]).collect();
        let cur_pts: Vec<Point2<T>> = cur_left.iter().map(|&j| current.centroids[j]).collect();
        let ref_tree = KdTree::build(&ref_pts).expect("nonempty, finite");
        let cur_tree = KdTree::build(&cur_pts).expect("nonempty, finite");

        let back: Vec<usize> = cur_pts.iter().map(|&p| ref_tree.nearest(p).index).collect();
        let mut ref_taken = vec![false; ref_pts.len()];
        let mut cur_taken = vec![false; cur_pts.len()];
        let mut formed = 0;
        for (a, &p) in ref_pts.iter().enumerate() {
            let n = cur_tree.nearest(p);
            if back[n.index] == a && n.distance_squared <= cap2 {
                ref_taken[a] = true;
                cur_taken[n.index] = true;
                let (ri, ci) = (ref_left[a], cur_left[n.index]);
                pairs.push(MatchedPair {
                    ref_index: ri,
                    cur_index: ci,
                    origin: p,
                    vector: current.centroids[ci] - p,
                });
                formed += 1;
            }
        }
        if formed == 0 {
            break;
        }
        ref_left = ref_left.iter().zip(&ref_taken).filter(|(_, &t)| !t).map(|(&i, _)| i).collect();
        cur_left = cur_left.iter().zip(&cur_taken).filter(|(_, &t)| !t).map(|(&j, _)| j).collect();
    }

    pairs.sort_by_key(|p| p.ref_index);
    let mut unmatched_ref: Vec<usize> = (0..reference.len()).collect();
    let mut unmatched_cur: Vec<usize> = (0..current.len()).collect();
    let mut ref_used = vec![false; reference.len()];
    let mut cur_used = vec![false; current.len()];
    for p in &pairs {
        ref_used[p.ref_index] = true;
        cur_used[p.cur_index] = true;
    }
    unmatched_ref.retain(|&i| !ref_used[i]);
    unmatched_cur.retain(|&j| !cur_used[j]);
    DisplacementField { pairs, unmatched_ref, unmatched_cur }
}
