//! Shear force from the summed marker displacement field.
//!
//! The field is summed per axis over matched markers, multiplied by an input
//! scale, and pushed through a calibrated no-intercept cubic
//! `F(x) = c1·x + c2·x² + c3·x³` (newtons). The default coefficients come
//! from a 6-axis F/T sensor calibration of the reference hardware; the input
//! scale defaults to `1 / (markers · px_per_mm)`, i.e. the mean per-marker
//! displacement in millimeters. One curve serves both axes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;
use crate::scalar::Real;
use crate::tracking::DisplacementField;

/// Reference cubic `(c1, c2, c3)`.
pub const DEFAULT_COEFFS: [f64; 3] = [2.344, -0.1363, -0.06845];
/// Domain over which the reference cubic is strictly increasing in `|x|`.
pub const DEFAULT_VALID_RANGE: [f64; 2] = [-2.5, 2.5];
/// Pixels per millimeter of the default 480×480 sensor model.
pub const DEFAULT_PX_PER_MM: f64 = 9.6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShearCalibration<T: Real = f64> {
    pub coeffs: [T; 3],
    /// Multiplier from the raw pixel sum to the polynomial's input. `None`
    /// selects `1 / (reference marker count · px_per_mm)`.
    #[serde(default)]
    pub input_scale: Option<T>,
    pub valid_range: [T; 2],
    pub px_per_mm: T,
    /// Evaluate `sign(x)·F(|x|)` so force direction follows displacement.
    #[serde(default = "default_true")]
    pub sign_symmetric: bool,
    /// Fit residual, when this calibration came from [`fit_calibration`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rms_residual: Option<T>,
}

fn default_true() -> bool {
    true
}

impl<T: Real> Default for ShearCalibration<T> {
    fn default() -> Self {
        Self {
            coeffs: DEFAULT_COEFFS.map(T::lit),
            input_scale: None,
            valid_range: DEFAULT_VALID_RANGE.map(T::lit),
            px_per_mm: T::lit(DEFAULT_PX_PER_MM),
            sign_symmetric: true,
            rms_residual: None,
        }
    }
}

impl<T: Real> ShearCalibration<T> {
    /// Raw polynomial, no clamping or sign handling.
    #[inline]
    pub fn polynomial(&self, x: T) -> T {
        let [c1, c2, c3] = self.coeffs;
        x * (c1 + x * (c2 + x * c3))
    }

    #[inline]
    pub fn derivative(&self, x: T) -> T {
        let [c1, c2, c3] = self.coeffs;
        c1 + x * (T::lit(2.0) * c2 + x * T::lit(3.0) * c3)
    }

    /// Largest `|x|` the calibration accepts.
    pub fn magnitude_bound(&self) -> T {
        self.valid_range[0].abs().max(self.valid_range[1].abs())
    }

    /// Strictly positive derivative on `[0, hi]`. The derivative is a
    /// quadratic, so checking both ends and the interior extremum suffices.
    pub fn is_increasing_on(&self, hi: T) -> bool {
        let [_, c2, c3] = self.coeffs;
        let mut ok = self.derivative(T::zero()) > T::zero() && self.derivative(hi) > T::zero();
        if c3 != T::zero() {
            let vertex = -c2 / (T::lit(3.0) * c3);
            if vertex > T::zero() && vertex < hi {
                ok &= self.derivative(vertex) > T::zero();
            }
        }
        ok
    }

    pub fn validate(&self) -> Result<()> {
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::Config("calibration coefficients must be finite".into()));
        }
        let [lo, hi] = self.valid_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::Config(format!("empty calibration range [{lo}, {hi}]")));
        }
        if !(self.px_per_mm.is_finite() && self.px_per_mm > T::zero()) {
            return Err(Error::Config("px_per_mm must be positive".into()));
        }
        if let Some(s) = self.input_scale {
            if !(s.is_finite() && s > T::zero()) {
                return Err(Error::Config("input_scale must be positive".into()));
            }
        }
        let bound = if self.sign_symmetric { self.magnitude_bound() } else { hi.max(T::zero()) };
        if bound > T::zero() && !self.is_increasing_on(bound) {
            return Err(Error::Config(format!("calibration curve is not strictly increasing on [0, {bound}]")));
        }
        Ok(())
    }

    /// Scale applied to raw pixel sums for a reference set of `n_markers`.
    pub fn scale_for(&self, n_markers: usize) -> T {
        match self.input_scale {
            Some(s) => s,
            None => T::one() / (T::from_count(n_markers.max(1)) * self.px_per_mm),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cal: Self = serde_json::from_str(text)?;
        cal.validate()?;
        Ok(cal)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

/// Maps one scaled axis sum to force. Returns the force and whether the
/// input was clamped to the calibrated range.
pub fn map_shear<T: Real>(x: T, cal: &ShearCalibration<T>) -> Result<(T, bool)> {
    if !x.is_finite() {
        return Err(Error::Input(format!("non-finite shear input {x}")));
    }
    if cal.sign_symmetric {
        let bound = cal.magnitude_bound();
        let m = x.abs();
        let (m, saturated) = if m > bound { (bound, true) } else { (m, false) };
        let f = cal.polynomial(m);
        Ok((if x < T::zero() { -f } else { f }, saturated))
    } else {
        let [lo, hi] = cal.valid_range;
        let clamped = x.max(lo).min(hi);
        Ok((cal.polynomial(clamped), clamped != x))
    }
}

/// `(Σdx, Σdy)` over matched pairs.
pub fn sum_field<T: Real>(field: &DisplacementField<T>) -> Point2<T> {
    let mut acc = Point2::zero();
    for p in &field.pairs {
        acc += p.vector;
    }
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real")]
pub struct ShearEstimate<T: Real = f64> {
    /// Raw per-axis displacement sums, pixels.
    pub sum_raw: Point2<T>,
    /// Polynomial inputs after scaling.
    pub x_scaled: Point2<T>,
    /// Per-axis force, newtons.
    pub force: Point2<T>,
    pub magnitude: T,
    pub saturated: bool,
}

impl<T: Real> ShearEstimate<T> {
    pub fn zero() -> Self {
        Self {
            sum_raw: Point2::zero(),
            x_scaled: Point2::zero(),
            force: Point2::zero(),
            magnitude: T::zero(),
            saturated: false,
        }
    }
}

/// Full shear stage: sum, scale by the reference marker count, map per axis.
pub fn estimate_shear<T: Real>(field: &DisplacementField<T>, cal: &ShearCalibration<T>, n_reference_markers: usize) -> Result<ShearEstimate<T>> {
    let sum_raw = sum_field(field);
    let scale = cal.scale_for(n_reference_markers);
    let x_scaled = sum_raw.scale(scale);
    let (sx, sat_x) = map_shear(x_scaled.x, cal)?;
    let (sy, sat_y) = map_shear(x_scaled.y, cal)?;
    let force = Point2::new(sx, sy);
    Ok(ShearEstimate { sum_raw, x_scaled, force, magnitude: force.norm(), saturated: sat_x || sat_y })
}

/// Least-squares fit of a no-intercept cubic to `(x_scaled, force)` samples.
///
/// The returned calibration spans the sample range, keeps the default
/// `px_per_mm` and automatic input scale, and records the RMS residual.
pub fn fit_calibration<T: Real>(samples: &[(T, T)]) -> Result<ShearCalibration<T>> {
    if samples.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 samples for 3 coefficients, got {}", samples.len())));
    }
    if samples.iter().any(|(x, f)| !x.is_finite() || !f.is_finite()) {
        return Err(Error::Fit("non-finite sample".into()));
    }
    let cols: Vec<Vec<T>> = (1..=3)
        .map(|k| samples.iter().map(|&(x, _)| x.powi(k)).collect())
        .collect();
    let rhs: Vec<T> = samples.iter().map(|&(_, f)| f).collect();
    let coeffs = solve_least_squares(cols, rhs).ok_or_else(|| Error::Fit("rank-deficient design: need at least 3 distinct nonzero x values".into()))?;
    let coeffs = [coeffs[0], coeffs[1], coeffs[2]];

    let lo = samples.iter().map(|s| s.0).fold(T::infinity(), T::min);
    let hi = samples.iter().map(|s| s.0).fold(T::neg_infinity(), T::max);
    let mut cal = ShearCalibration { coeffs, valid_range: [lo, hi], ..ShearCalibration::default() };
    let sse = samples
        .iter()
        .map(|&(x, f)| {
            let r = cal.polynomial(x) - f;
            r * r
        })
        .fold(T::zero(), |a, b| a + b);
    cal.rms_residual = Some((sse / T::from_count(samples.len())).sqrt());
    cal.validate().map_err(|e| Error::Fit(e.to_string()))?;
    Ok(cal)
}

/// Householder QR least squares on column-major data. Columns are scaled to
/// unit norm first; `None` when the design is numerically rank deficient.
fn solve_least_squares<T: Real>(mut cols: Vec<Vec<T>>, mut rhs: Vec<T>) -> Option<Vec<T>> {
    let n = rhs.len();
    let k = cols.len();
    let mut col_scale = vec![T::one(); k];
    for (c, s) in cols.iter_mut().zip(&mut col_scale) {
        let norm = c.iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
        if norm == T::zero() {
            return None;
        }
        *s = norm;
        for v in c.iter_mut() {
            *v /= norm;
        }
    }
    let mut diag = vec![T::zero(); k];
    for j in 0..k {
        let norm = cols[j][j..].iter().fold(T::zero(), |a, &v| a + v * v).sqrt();
        // columns are unit norm, so this is a relative rank test
        if norm <= T::epsilon() * T::lit(1e3) {
            return None;
        }
        let alpha = if cols[j][j] > T::zero() { -norm } else { norm };
        let mut v: Vec<T> = cols[j][j..].to_vec();
        v[0] -= alpha;
        let vnorm2 = v.iter().fold(T::zero(), |a, &x| a + x * x);
        diag[j] = alpha;
        if vnorm2 == T::zero() {
            continue;
        }
        let reflect = |target: &mut [T]| {
            let dot = v.iter().zip(target.iter()).fold(T::zero(), |a, (&p, &q)| a + p * q);
            let f = T::lit(2.0) * dot / vnorm2;
            for (t, &p) in target.iter_mut().zip(&v) {
                *t -= f * p;
            }
        };
        for col in cols.iter_mut().skip(j + 1) {
            reflect(&mut col[j..]);
        }
        reflect(&mut rhs[j..n]);
    }
    let mut x = vec![T::zero(); k];
    for j in (0..k).rev() {
        let mut acc = rhs[j];
        for (i, col) in cols.iter().enumerate().skip(j + 1) {
            acc -= col[j] * x[i];
        }
        x[j] = acc / diag[j];
    }
    Some(x.iter().zip(&col_scale).map(|(&v, &s)| v / s).collect())
}
