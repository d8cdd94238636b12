use serde::{Deserialize, Serialize};
use viko_core::{Point2, Roi};

use crate::error::{SimError, SimResult};

/// Camera and membrane parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorModel {
    pub width: u32,
    pub height: u32,
    pub rows: u32,
    pub cols: u32,
    pub pitch_mm: f64,
    pub px_per_mm: f64,
    pub dot_radius_px: f64,
    pub background: [u8; 3],
    pub marker: [u8; 3],
    /// Color the contact region blends toward.
    pub contact_tint: [u8; 3],
    /// Tint blend weight at the shallowest and deepest indent.
    pub tint_range: [f64; 2],
    /// Indent depths mapped onto `tint_range`, millimeters.
    pub depth_range_mm: [f64; 2],
    /// Per-channel Gaussian noise, 8-bit levels.
    pub noise_sigma: f64,
    /// Decay length of shear outside the contact, pixels.
    pub falloff_sigma_px: f64,
    /// Border excluded from the sensing area.
    pub roi_border: u32,
}

impl Default for SensorModel {
    fn default() -> Self {
        Self {
            width: 480,
            height: 480,
            rows: 10,
            cols: 10,
            pitch_mm: 2.5,
            px_per_mm: 9.6,
            dot_radius_px: 4.0,
            background: [180, 180, 180],
            marker: [200, 30, 30],
            contact_tint: [90, 110, 175],
            tint_range: [0.15, 0.6],
            depth_range_mm: [0.1, 1.0],
            noise_sigma: 1.5,
            falloff_sigma_px: 15.0,
            roi_border: 10,
        }
    }
}

impl SensorModel {
    pub fn noise_free() -> Self {
        Self { noise_sigma: 0.0, ..Self::default() }
    }

    pub fn pitch_px(&self) -> f64 {
        self.pitch_mm * self.px_per_mm
    }

    /// Image point the scene origin maps to.
    pub fn center_px(&self) -> Point2 {
        Point2::new(self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    pub fn mm_to_px(&self, p: [f64; 2]) -> Point2 {
        self.center_px() + Point2::new(p[0], p[1]) * self.px_per_mm
    }

    pub fn marker_count(&self) -> usize {
        (self.rows * self.cols) as usize
    }

    /// Rest positions in row-major order, centered on the image.
    pub fn rest_markers(&self) -> Vec<Point2> {
        let c = self.center_px();
        let p = self.pitch_px();
        let (r0, c0) = ((self.rows as f64 - 1.0) / 2.0, (self.cols as f64 - 1.0) / 2.0);
        (0..self.rows)
            .flat_map(|r| (0..self.cols).map(move |k| (r, k)))
            .map(|(r, k)| Point2::new(c.x + (k as f64 - c0) * p, c.y + (r as f64 - r0) * p))
            .collect()
    }

    pub fn roi(&self) -> Roi {
        Roi::inset(self.width, self.height, self.roi_border)
    }

    /// Tint weight for an indent depth, linear over `depth_range_mm`.
    pub fn tint_strength(&self, depth_mm: f64) -> f64 {
        let [d0, d1] = self.depth_range_mm;
        let [s0, s1] = self.tint_range;
        let u = ((depth_mm - d0) / (d1 - d0)).clamp(0.0, 1.0);
        s0 + u * (s1 - s0)
    }

    pub fn validate(&self) -> SimResult<()> {
        let bad = |m: &str| Err(SimError::Model(m.to_string()));
        if self.width == 0 || self.height == 0 || self.rows == 0 || self.cols == 0 {
            return bad("image and grid dimensions must be positive");
        }
        if !(self.px_per_mm > 0.0 && self.pitch_mm > 0.0 && self.dot_radius_px > 0.0) {
            return bad("pitch, scale and dot radius must be positive");
        }
        if self.pitch_px() < 4.0 * self.dot_radius_px {
            return bad("pitch must be at least four dot radii");
        }
        if !(self.noise_sigma >= 0.0 && self.falloff_sigma_px > 0.0) {
            return bad("noise must be non-negative and falloff positive");
        }
        if !(self.depth_range_mm[1] > self.depth_range_mm[0]) {
            return bad("depth range must be increasing");
        }
        if 2 * self.roi_border >= self.width.min(self.height) {
            return bad("ROI border leaves no sensing area");
        }
        let margin = self.dot_radius_px + self.pitch_px() / 2.0;
        let span_x = (self.cols as f64 - 1.0) * self.pitch_px() / 2.0 + margin;
        let span_y = (self.rows as f64 - 1.0) * self.pitch_px() / 2.0 + margin;
        let c = self.center_px();
        if c.x - span_x < self.roi_border as f64 || c.y - span_y < self.roi_border as f64 {
            return bad("marker grid does not fit inside the sensing area");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_geometry() {
        let m = SensorModel::default();
        m.validate().unwrap();
        assert!((m.pitch_px() - 24.0).abs() < 1e-12);
        let pts = m.rest_markers();
        assert_eq!(pts.len(), 100);
        assert_eq!((pts[0].x, pts[0].y), (132.0, 132.0));
        assert_eq!((pts[99].x, pts[99].y), (348.0, 348.0));
        assert_eq!(m.roi().area(), 460 * 460);
    }

    #[test]
    fn tint_is_linear_in_depth() {
        let m = SensorModel::default();
        assert!((m.tint_strength(0.1) - 0.15).abs() < 1e-12);
        assert!((m.tint_strength(1.0) - 0.6).abs() < 1e-12);
        assert!((m.tint_strength(0.55) - 0.375).abs() < 1e-12);
    }

    #[test]
    fn invalid_models() {
        assert!(SensorModel { dot_radius_px: 7.0, ..Default::default() }.validate().is_err());
        assert!(SensorModel { rows: 30, ..Default::default() }.validate().is_err());
        assert!(SensorModel { noise_sigma: -1.0, ..Default::default() }.validate().is_err());
    }
}
