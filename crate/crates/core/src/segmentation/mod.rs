//! Contact-area segmentation behind a pluggable interface.
//!
//! [`heuristic`] differences each frame against the no-contact reference;
//! [`external`] hands frames to an out-of-process model over a file or pipe
//! exchange and reads back a mask.

pub mod external;
pub mod heuristic;

pub use external::{ExchangeConfig, ExternalConfig, ExternalSegmenter};
pub use heuristic::{segment_heuristic, HeuristicConfig, HeuristicSegmenter};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::contour::{trace_contours, Contour};
use crate::imaging::{BinaryMask, Frame, Roi};

/// Default border excluded from the sensing ROI, pixels.
pub const DEFAULT_ROI_BORDER: u32 = 10;

/// Contact region of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactMask {
    pub mask: BinaryMask,
    /// Boundary loops of every 4-connected component of `mask`.
    pub contours: Vec<Contour>,
    /// Percent of `roi` covered by `mask`.
    pub area_fraction: f64,
    pub roi: Roi,
}

impl ContactMask {
    pub fn from_mask(mask: BinaryMask, roi: Roi) -> Result<Self> {
        let area_fraction = area_fraction(&mask, &roi)?;
        let contours = if area_fraction > 0.0 || !mask.is_empty() { trace_contours(&mask) } else { Vec::new() };
        Ok(Self { mask, contours, area_fraction, roi })
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            mask: BinaryMask::new(width, height),
            contours: Vec::new(),
            area_fraction: 0.0,
            roi: Roi::inset(width, height, DEFAULT_ROI_BORDER),
        }
    }

    /// Every pixel in contact.
    pub fn full(width: u32, height: u32) -> Self {
        let mask = BinaryMask::from_fn(width, height, |_, _| true);
        Self::from_mask(mask, Roi::inset(width, height, DEFAULT_ROI_BORDER)).expect("valid ROI")
    }
}

/// `100 · (set pixels in roi) / (roi pixels)`.
pub fn area_fraction(mask: &BinaryMask, roi: &Roi) -> Result<f64> {
    if roi.area() == 0 {
        return Err(Error::Input("empty ROI".into()));
    }
    roi.validate(mask.width(), mask.height()).map_err(|e| Error::Input(e.to_string()))?;
    Ok(100.0 * mask.count_in(roi) as f64 / roi.area() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SegmenterConfig {
    Heuristic(HeuristicConfig),
    External(ExternalConfig),
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self::Heuristic(HeuristicConfig::default())
    }
}

/// Produces a raw contact mask for a frame.
pub trait Segmenter {
    fn segment(&mut self, frame: &Frame) -> Result<BinaryMask>;
}
