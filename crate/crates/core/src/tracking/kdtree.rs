//! Static 2D k-d tree for exact nearest-neighbor queries.
//!
//! Ties in distance resolve to the point with the lower `(y, x)`, then the
//! lower input index, so results never depend on tree layout.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::imaging::MarkerSet;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Neighbor<T: Real = f64> {
    /// Index into the point list the tree was built from.
    pub index: usize,
    pub distance_squared: T,
}

impl<T: Real> Neighbor<T> {
    pub fn distance(&self) -> T {
        self.distance_squared.sqrt()
    }
}

/// Immutable after construction; share freely across threads.
#[derive(Debug, Clone)]
pub struct KdTree<T: Real = f64> {
    points: Vec<Point2<T>>,
    // Node layout: the median of every [lo, hi) range is the splitting node,
    // axis alternates x, y with depth.
    perm: Vec<u32>,
}

#[inline]
fn axis_value<T: Real>(p: &Point2<T>, axis: usize) -> T {
    if axis == 0 {
        p.x
    } else {
        p.y
    }
}

/// Total order on candidates: distance, then `(y, x)`, then index.
#[inline]
fn candidate_cmp<T: Real>(d2a: T, pa: &Point2<T>, ia: usize, d2b: T, pb: &Point2<T>, ib: usize) -> Ordering {
    d2a.partial_cmp(&d2b)
        .unwrap_or(Ordering::Equal)
        .then_with(|| pa.cmp_yx(pb))
        .then(ia.cmp(&ib))
}

impl<T: Real> KdTree<T> {
    pub fn build(points: &[Point2<T>]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Precondition("cannot index an empty point set".into()));
        }
        if let Some(p) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::Input(format!("non-finite point {p:?}")));
        }
        let mut perm: Vec<u32> = (0..points.len() as u32).collect();
        Self::build_range(points, &mut perm, 0);
        Ok(Self { points: points.to_vec(), perm })
    }

    pub fn from_markers(markers: &MarkerSet<T>) -> Result<Self> {
        Self::build(&markers.centroids)
    }

    fn build_range(points: &[Point2<T>], perm: &mut [u32], depth: usize) {
        if perm.len() <= 1 {
            return;
        }
        let axis = depth % 2;
        let mid = perm.len() / 2;
        perm.select_nth_unstable_by(mid, |&a, &b| {
            let (pa, pb) = (&points[a as usize], &points[b as usize]);
            axis_value(pa, axis)
                .partial_cmp(&axis_value(pb, axis))
                .unwrap_or(Ordering::Equal)
                .then(a.cmp(&b))
        });
        let (left, right) = perm.split_at_mut(mid);
        Self::build_range(points, left, depth + 1);
        Self::build_range(points, &mut right[1..], depth + 1);
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point2<T>] {
        &self.points
    }

    pub fn nearest(&self, query: Point2<T>) -> Neighbor<T> {
        let mut best = Neighbor { index: usize::MAX, distance_squared: T::infinity() };
        self.search(query, 0, self.perm.len(), 0, &mut best);
        best
    }

    fn consider(&self, query: Point2<T>, idx: usize, best: &mut Neighbor<T>) {
        let p = &self.points[idx];
        let d2 = p.distance_squared(query);
        let better = best.index == usize::MAX || {
            let bp = &self.points[best.index];
            candidate_cmp(d2, p, idx, best.distance_squared, bp, best.index) == Ordering::Less
        };
        if better {
            *best = Neighbor { index: idx, distance_squared: d2 };
        }
    }

    fn search(&self, query: Point2<T>, lo: usize, hi: usize, depth: usize, best: &mut Neighbor<T>) {
        if lo >= hi {
            return;
        }
        let mid = lo + (hi - lo) / 2;
        let idx = self.perm[mid] as usize;
        self.consider(query, idx, best);
        let axis = depth % 2;
        let diff = axis_value(&query, axis) - axis_value(&self.points[idx], axis);
        let (near, far) = if diff <= T::zero() { ((lo, mid), (mid + 1, hi)) } else { ((mid + 1, hi), (lo, mid)) };
        self.search(query, near.0, near.1, depth + 1, best);
        // `<=` keeps equidistant candidates on the far side reachable for the tie-break.
        if diff * diff <= best.distance_squared {
            self.search(query, far.0, far.1, depth + 1, best);
        }
    }
}

/// Linear-scan nearest neighbor with the same tie-break as [`KdTree`].
pub fn nearest_brute_force<T: Real>(points: &[Point2<T>], query: Point2<T>) -> Option<Neighbor<T>> {
    let mut best: Option<(usize, T)> = None;
    for (i, p) in points.iter().enumerate() {
        let d2 = p.distance_squared(query);
        best = match best {
            Some((bi, bd2)) if candidate_cmp(d2, p, i, bd2, &points[bi], bi) != Ordering::Less => Some((bi, bd2)),
            _ => Some((i, d2)),
        };
    }
    best.map(|(index, distance_squared)| Neighbor { index, distance_squared })
}
