//! Frame-differencing contact segmenter.
//!
//! Marker pixels (in either frame, grown by a small margin for anti-aliased
//! edges) are excluded from the difference because markers move under shear.
//! The remaining per-pixel color difference is optionally box-blurred over
//! valid pixels and thresholded. Excluded pixels then take the label of the
//! nearest valid pixel, which also handles markers straddling the contact
//! edge where a closing alone leaves notches. Opening drops speckle, closing
//! smooths what is left, and small regions are removed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::components::remove_small_components;
use crate::imaging::morphology::{morphology, MorphOp};
use crate::imaging::threshold::{threshold, ThresholdConfig};
use crate::imaging::{BinaryMask, Frame, Roi};
use crate::segmentation::{ContactMask, Segmenter};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HeuristicConfig {
    /// Mean absolute RGB difference (0–255 scale) above which a pixel is
    /// considered in contact.
    pub diff_threshold: f32,
    /// Radius of the normalized box blur applied to the difference; 0 disables.
    pub blur_radius: u32,
    /// Margin grown around marker pixels before excluding them.
    pub marker_margin: u32,
    pub open_radius: u32,
    pub close_radius: u32,
    /// Smallest kept region, pixels.
    pub min_region_area: u32,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self {
            diff_threshold: 6.0,
            blur_radius: 0,
            marker_margin: 2,
            open_radius: 2,
            close_radius: 3,
            min_region_area: 200,
        }
    }
}

/// Stateless form: segments `frame` against `reference`.
pub fn segment_heuristic(
    frame: &Frame,
    reference: &Frame,
    cfg: &HeuristicConfig,
    marker_threshold: &ThresholdConfig,
    roi: &Roi,
) -> Result<ContactMask> {
    let ref_markers = threshold(reference, marker_threshold)?;
    let mask = heuristic_mask(frame, reference, &ref_markers, cfg, marker_threshold, roi)?;
    ContactMask::from_mask(mask, *roi)
}

fn heuristic_mask(
    frame: &Frame,
    reference: &Frame,
    ref_markers: &BinaryMask,
    cfg: &HeuristicConfig,
    marker_threshold: &ThresholdConfig,
    roi: &Roi,
) -> Result<BinaryMask> {
    if !frame.same_dimensions(reference) {
        return Err(Error::Input(format!(
            "frame {}x{} does not match reference {}x{}",
            frame.width(),
            frame.height(),
            reference.width(),
            reference.height()
        )));
    }
    roi.validate(frame.width(), frame.height()).map_err(|e| Error::Input(e.to_string()))?;
    let (w, h) = (frame.width() as usize, frame.height() as usize);

    let mut excluded = threshold(frame, marker_threshold)?.union(ref_markers);
    if cfg.marker_margin > 0 && !excluded.is_empty() {
        excluded = morphology(&excluded, MorphOp::Dilate, cfg.marker_margin)?;
    }

    let (fd, rd, ex) = (frame.data(), reference.data(), excluded.as_slice());
    let mut diff = vec![0f32; w * h];
    let mut valid = vec![0u8; w * h];
    for y in roi.y as usize..(roi.y + roi.height) as usize {
        for x in roi.x as usize..(roi.x + roi.width) as usize {
            let i = y * w + x;
            if ex[i] != 0 {
                continue;
            }
            let s: u32 = (0..3).map(|c| (fd[i * 3 + c] as i32 - rd[i * 3 + c] as i32).unsigned_abs()).sum();
            diff[i] = s as f32 / 3.0;
            valid[i] = 1;
        }
    }
    if cfg.blur_radius > 0 {
        diff = normalized_box_blur(&diff, &valid, w, h, cfg.blur_radius as usize);
    }

    let t = cfg.diff_threshold;
    let mut bits: Vec<u8> = diff.iter().zip(&valid).map(|(&d, &v)| (v != 0 && d > t) as u8).collect();
    if bits.iter().any(|&b| b != 0) {
        fill_excluded(&mut bits, &valid, ex, w, h);
    }
    let mut mask = BinaryMask::from_bytes(frame.width(), frame.height(), &bits)?;
    if mask.is_empty() {
        return Ok(mask);
    }
    if cfg.open_radius > 0 {
        mask = morphology(&mask, MorphOp::Open, cfg.open_radius)?;
    }
    if cfg.close_radius > 0 {
        mask = morphology(&mask, MorphOp::Close, cfg.close_radius)?;
    }
    mask.restrict_to(roi);
    Ok(remove_small_components(&mask, cfg.min_region_area))
}

/// Gives every excluded pixel the label of its nearest valid pixel under a
/// 3-4 chamfer metric. Pixels that are neither valid nor excluded (outside
/// the ROI) neither give nor take labels.
fn fill_excluded(bits: &mut [u8], valid: &[u8], excluded: &[u8], w: usize, h: usize) {
    const FAR: u32 = u32::MAX / 2;
    let mut dist: Vec<u32> = valid.iter().map(|&v| if v != 0 { 0 } else { FAR }).collect();
    let forward = [(-1i64, -1i64, 4u32), (0, -1, 3), (1, -1, 4), (-1, 0, 3)];
    let backward = [(1i64, 1i64, 4u32), (0, 1, 3), (-1, 1, 4), (1, 0, 3)];
    let mut relax = |x: usize, y: usize, offsets: &[(i64, i64, u32)]| {
        let i = y * w + x;
        if excluded[i] == 0 || valid[i] != 0 {
            return;
        }
        for &(dx, dy, c) in offsets {
            let (nx, ny) = (x as i64 + dx, y as i64 + dy);
            if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                continue;
            }
            let j = ny as usize * w + nx as usize;
            if dist[j] + c < dist[i] {
                dist[i] = dist[j] + c;
                bits[i] = bits[j];
            }
        }
    };
    for y in 0..h {
        for x in 0..w {
            relax(x, y, &forward);
        }
    }
    for y in (0..h).rev() {
        for x in (0..w).rev() {
            relax(x, y, &backward);
        }
    }
}

/// Mean of valid pixels within a `(2r+1)²` window; pixels with no valid
/// neighbor keep 0.
fn normalized_box_blur(values: &[f32], valid: &[u8], w: usize, h: usize, r: usize) -> Vec<f32> {
    let stride = w + 1;
    let mut sum = vec![0f64; stride * (h + 1)];
    let mut cnt = vec![0u32; stride * (h + 1)];
    for y in 0..h {
        let (mut rs, mut rc) = (0f64, 0u32);
        for x in 0..w {
            let i = y * w + x;
            if valid[i] != 0 {
                rs += values[i] as f64;
                rc += 1;
            }
            sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + rs;
            cnt[(y + 1) * stride + x + 1] = cnt[y * stride + x + 1] + rc;
        }
    }
    let mut out = vec![0f32; w * h];
    for y in 0..h {
        let (y0, y1) = (y.saturating_sub(r), (y + r + 1).min(h));
        for x in 0..w {
            let (x0, x1) = (x.saturating_sub(r), (x + r + 1).min(w));
            let c = cnt[y1 * stride + x1] + cnt[y0 * stride + x0] - cnt[y0 * stride + x1] - cnt[y1 * stride + x0];
            if c > 0 {
                let s = sum[y1 * stride + x1] + sum[y0 * stride + x0] - sum[y0 * stride + x1] - sum[y1 * stride + x0];
                out[y * w + x] = (s / c as f64) as f32;
            }
        }
    }
    out
}

/// Holds the reference frame and its marker mask across frames.
#[derive(Debug, Clone)]
pub struct HeuristicSegmenter {
    reference: Frame,
    ref_markers: BinaryMask,
    cfg: HeuristicConfig,
    marker_threshold: ThresholdConfig,
    roi: Roi,
}

impl HeuristicSegmenter {
    pub fn new(reference: Frame, cfg: HeuristicConfig, marker_threshold: ThresholdConfig, roi: Roi) -> Result<Self> {
        roi.validate(reference.width(), reference.height())?;
        let ref_markers = threshold(&reference, &marker_threshold)?;
        Ok(Self { reference, ref_markers, cfg, marker_threshold, roi })
    }

    pub fn mask(&self, frame: &Frame) -> Result<BinaryMask> {
        heuristic_mask(frame, &self.reference, &self.ref_markers, &self.cfg, &self.marker_threshold, &self.roi)
    }

    pub fn reference(&self) -> &Frame {
        &self.reference
    }
}

impl Segmenter for HeuristicSegmenter {
    fn segment(&mut self, frame: &Frame) -> Result<BinaryMask> {
        self.mask(frame)
    }
}
