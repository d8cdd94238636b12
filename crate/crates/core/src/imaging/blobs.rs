use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::imaging::components::{label_components, Connectivity};
use crate::imaging::mask::BinaryMask;
use crate::scalar::Real;

/// Area filter for marker blobs, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct BlobConfig {
    pub min_area: u32,
    pub max_area: u32,
}

impl Default for BlobConfig {
    fn default() -> Self {
        Self { min_area: 8, max_area: 500 }
    }
}

/// Marker centroids of one frame, sorted by `(y, x)`.
///
/// Pixel `(i, j)` has its center at coordinate `(i, j)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct MarkerSet<T: Real = f64> {
    pub centroids: Vec<Point2<T>>,
    pub areas: Vec<u32>,
    pub frame_index: u64,
}

impl<T: Real> MarkerSet<T> {
    pub fn empty(frame_index: u64) -> Self {
        Self { centroids: Vec::new(), areas: Vec::new(), frame_index }
    }

    /// Builds a set from arbitrary points, applying the canonical ordering.
    /// Areas default to zero.
    pub fn from_points(points: impl IntoIterator<Item = Point2<T>>, frame_index: u64) -> Self {
        let mut centroids: Vec<Point2<T>> = points.into_iter().collect();
        centroids.sort_by(|a, b| a.cmp_yx(b));
        let areas = vec![0; centroids.len()];
        Self { centroids, areas, frame_index }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.centroids.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.centroids.is_empty()
    }
}

/// One unweighted centroid per connected component (8-connectivity) whose
/// area lies within the configured bounds.
pub fn detect_blobs<T: Real>(mask: &BinaryMask, cfg: &BlobConfig, frame_index: u64) -> MarkerSet<T> {
    let lab = label_components(mask, Connectivity::Eight);
    let mut found: Vec<(Point2<T>, u32)> = lab
        .components
        .iter()
        .filter(|c| c.area >= cfg.min_area && c.area <= cfg.max_area)
        .map(|c| {
            let n = c.area as f64;
            let p = Point2::new(T::lit(c.sum_x as f64 / n), T::lit(c.sum_y as f64 / n));
            (p, c.area)
        })
        .collect();
    found.sort_by(|a, b| a.0.cmp_yx(&b.0));
    MarkerSet {
        centroids: found.iter().map(|f| f.0).collect(),
        areas: found.iter().map(|f| f.1).collect(),
        frame_index,
    }
}
