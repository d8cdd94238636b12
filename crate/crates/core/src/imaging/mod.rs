//! Low-level image operations: red-marker thresholding, disk morphology,
//! connected components, blob centroids and boundary tracing.

pub mod blobs;
pub mod components;
pub mod contour;
pub mod frame;
pub mod io;
pub mod mask;
pub mod morphology;
pub mod threshold;

pub use blobs::{detect_blobs, BlobConfig, MarkerSet};
pub use components::{label_components, remove_small_components, Connectivity};
pub use contour::{contours_contain, rasterize_contours, trace_contours, Contour};
pub use frame::{Frame, Roi, DEFAULT_FRAME_SIZE};
pub use mask::BinaryMask;
pub use morphology::{morphology, MorphOp};
pub use threshold::{threshold, ThresholdConfig};

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// Cleanup applied to the marker mask before blob detection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct MarkerMorphology {
    /// Opening radius; 0 skips the opening.
    pub open_radius: u32,
    /// Closing radius; 0 skips the closing.
    pub close_radius: u32,
}

impl Default for MarkerMorphology {
    fn default() -> Self {
        Self { open_radius: 2, close_radius: 2 }
    }
}

impl MarkerMorphology {
    pub fn apply(&self, mask: &BinaryMask) -> Result<BinaryMask> {
        let mut m = if self.open_radius > 0 {
            morphology(mask, MorphOp::Open, self.open_radius)?
        } else {
            mask.clone()
        };
        if self.close_radius > 0 {
            m = morphology(&m, MorphOp::Close, self.close_radius)?;
        }
        Ok(m)
    }
}

/// Threshold → morphology → blob detection, the marker extraction chain run
/// on the reference frame and on every incoming frame.
pub fn extract_markers<T: crate::Real>(
    frame: &Frame,
    threshold_cfg: &ThresholdConfig,
    morph: &MarkerMorphology,
    blob_cfg: &BlobConfig,
) -> Result<MarkerSet<T>> {
    let raw = threshold(frame, threshold_cfg)?;
    let clean = morph.apply(&raw)?;
    Ok(detect_blobs(&clean, blob_cfg, frame.index))
}
