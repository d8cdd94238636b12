//! Incipient slip: in-contact markers should move as one rigid body. A
//! least-squares rotation + translation is fitted from their reference to
//! their current positions, and markers deviating from that rigid prediction
//! by more than a pixel threshold are counted. More than `count_threshold`
//! deviating markers flags slip.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{centroid, Point2};
use crate::imaging::contour::{contours_contain, Contour};
use crate::scalar::Real;
use crate::segmentation::ContactMask;
use crate::tracking::{DisplacementField, MatchedPair};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct RigidTransform2D<T: Real = f64> {
    /// Radians; positive turns +x toward +y.
    pub rotation: T,
    pub translation: Point2<T>,
    /// RMS distance between transformed source and target points, pixels.
    pub rms_residual: T,
}

impl<T: Real> RigidTransform2D<T> {
    pub fn identity() -> Self {
        Self { rotation: T::zero(), translation: Point2::zero(), rms_residual: T::zero() }
    }

    #[inline]
    pub fn apply(&self, p: Point2<T>) -> Point2<T> {
        p.rotate(self.rotation) + self.translation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real", default)]
pub struct SlipConfig<T: Real = f64> {
    /// Per-marker deviation from the rigid prediction that counts as an
    /// outlier, pixels.
    pub residual_threshold: T,
    /// Slip when strictly more outliers than this.
    pub count_threshold: usize,
    pub min_inliers_for_fit: usize,
    /// Refit once without the first-pass outliers before counting.
    pub trimmed_refit: bool,
}

impl<T: Real> Default for SlipConfig<T> {
    fn default() -> Self {
        Self { residual_threshold: T::lit(3.0), count_threshold: 6, min_inliers_for_fit: 3, trimmed_refit: false }
    }
}

impl<T: Real> SlipConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_threshold > T::zero()) {
            return Err(Error::Config("residual_threshold must be positive".into()));
        }
        if self.min_inliers_for_fit < 2 {
            return Err(Error::Config("min_inliers_for_fit must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct SlipReport<T: Real = f64> {
    pub slip: bool,
    pub outlier_count: usize,
    /// Reference-marker indices of the outliers.
    pub outlier_indices: Vec<usize>,
    pub transform: Option<RigidTransform2D<T>>,
    /// Too few in-contact markers to fit; slip evaluation skipped.
    pub insufficient_fit: bool,
}

impl<T: Real> SlipReport<T> {
    pub fn none() -> Self {
        Self { slip: false, outlier_count: 0, outlier_indices: Vec::new(), transform: None, insufficient_fit: false }
    }
}

/// Matched pairs whose reference centroid lies inside or on a contact contour.
pub fn markers_inside<T: Real>(contours: &[Contour], field: &DisplacementField<T>) -> Vec<MatchedPair<T>> {
    if contours.is_empty() {
        return Vec::new();
    }
    field.pairs.iter().filter(|p| contours_contain(contours, p.origin)).copied().collect()
}

/// Closed-form least-squares rigid registration `target ≈ R·source + t`.
///
/// After centering both sets, the optimal angle is
/// `atan2(Sxy − Syx, Sxx + Syy)` over the 2×2 cross-covariance `S`; in 2D
/// this is the reflection-free SVD solution without the decomposition.
pub fn fit_rigid<T: Real>(source: &[Point2<T>], target: &[Point2<T>], min_pairs: usize) -> Result<RigidTransform2D<T>> {
    if source.len() != target.len() {
        return Err(Error::Input(format!("{} source vs {} target points", source.len(), target.len())));
    }
    let needed = min_pairs.max(1);
    if source.len() < needed {
        return Err(Error::InsufficientData { needed, got: source.len() });
    }
    let cs = centroid(source).expect("nonempty");
    let ct = centroid(target).expect("nonempty");
    let (mut dot, mut cross) = (T::zero(), T::zero());
    for (&s, &t) in source.iter().zip(target) {
        let (p, q) = (s - cs, t - ct);
        dot += p.dot(q);
        cross += p.cross(q);
    }
    let rotation = if dot == T::zero() && cross == T::zero() { T::zero() } else { cross.atan2(dot) };
    let translation = ct - cs.rotate(rotation);
    let mut tf = RigidTransform2D { rotation, translation, rms_residual: T::zero() };
    let sse = source.iter().zip(target).fold(T::zero(), |a, (&s, &t)| a + tf.apply(s).distance_squared(t));
    tf.rms_residual = (sse / T::from_count(source.len())).sqrt();
    Ok(tf)
}

/// Counts in-contact markers whose current position deviates from the rigid
/// prediction by more than the residual threshold.
pub fn detect_slip<T: Real>(field_in: &[MatchedPair<T>], transform: &RigidTransform2D<T>, cfg: &SlipConfig<T>) -> SlipReport<T> {
    let outlier_indices: Vec<usize> = field_in
        .iter()
        .filter(|p| transform.apply(p.origin).distance(p.current()) > cfg.residual_threshold)
        .map(|p| p.ref_index)
        .collect();
    let outlier_count = outlier_indices.len();
    SlipReport {
        slip: outlier_count > cfg.count_threshold,
        outlier_count,
        outlier_indices,
        transform: Some(*transform),
        insufficient_fit: false,
    }
}

/// In-contact selection, rigid fit (optionally trimmed) and outlier count.
/// Zero contact area never reports slip.
pub fn evaluate_slip<T: Real>(contact: &ContactMask, field: &DisplacementField<T>, cfg: &SlipConfig<T>) -> SlipReport<T> {
    if contact.area_fraction <= 0.0 {
        return SlipReport::none();
    }
    let inside = markers_inside(&contact.contours, field);
    let src: Vec<Point2<T>> = inside.iter().map(|p| p.origin).collect();
    let dst: Vec<Point2<T>> = inside.iter().map(|p| p.current()).collect();
    let tf = match fit_rigid(&src, &dst, cfg.min_inliers_for_fit) {
        Ok(tf) => tf,
        Err(_) => return SlipReport { insufficient_fit: true, ..SlipReport::none() },
    };
    let first = detect_slip(&inside, &tf, cfg);
    if !cfg.trimmed_refit || first.outlier_count == 0 {
        return first;
    }
    let kept: Vec<MatchedPair<T>> = inside.iter().filter(|p| !first.outlier_indices.contains(&p.ref_index)).copied().collect();
    let src: Vec<Point2<T>> = kept.iter().map(|p| p.origin).collect();
    let dst: Vec<Point2<T>> = kept.iter().map(|p| p.current()).collect();
    match fit_rigid(&src, &dst, cfg.min_inliers_for_fit) {
        Ok(refit) => detect_slip(&inside, &refit, cfg),
        Err(_) => first,
    }
}
