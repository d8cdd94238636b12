use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{BlobConfig, MarkerMorphology, Roi, ThresholdConfig};
use crate::segmentation::{SegmenterConfig, DEFAULT_ROI_BORDER};
use crate::shear::ShearCalibration;
use crate::slip::SlipConfig;

/// Every stage's settings in one document. All fields default, so an empty
/// file is a valid configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct PipelineConfig {
    pub threshold: ThresholdConfig,
    pub marker_morphology: MarkerMorphology,
    pub blob: BlobConfig,
    pub matching: MatchConfig,
    pub calibration: CalibrationSource,
    pub segmenter: SegmenterConfig,
    pub slip: SlipConfig,
    pub reference: ReferenceConfig,
    pub roi: RoiConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MatchConfig {
    /// Largest accepted marker displacement, millimeters. Half the marker
    /// pitch keeps neighbors from being confused.
    pub max_match_distance_mm: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self { max_match_distance_mm: 1.25 }
    }
}

/// Inline calibration or a path to a calibration JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CalibrationSource {
    File { file: PathBuf },
    Inline(ShearCalibration),
}

impl Default for CalibrationSource {
    fn default() -> Self {
        Self::Inline(ShearCalibration::default())
    }
}

impl CalibrationSource {
    pub fn resolve(&self, base: Option<&Path>) -> Result<ShearCalibration> {
        let cal = match self {
            Self::Inline(c) => c.clone(),
            Self::File { file } => {
                let path = match base {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file.clone(),
                };
                ShearCalibration::load(&path)?
            }
        };
        cal.validate()?;
        Ok(cal)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ReferenceSource {
    /// Average the first `count` frames of the input.
    FirstN { count: usize },
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReferenceConfig {
    pub source: ReferenceSource,
    /// Markers in the rest-state grid.
    pub expected_markers: usize,
    /// Initialization fails below this fraction of `expected_markers`.
    pub min_marker_fraction: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { source: ReferenceSource::FirstN { count: 5 }, expected_markers: 100, min_marker_fraction: 0.9 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RoiConfig {
    /// Border excluded on every side when `rect` is unset.
    pub border: u32,
    pub rect: Option<Roi>,
}

impl Default for RoiConfig {
    fn default() -> Self {
        Self { border: DEFAULT_ROI_BORDER, rect: None }
    }
}

impl RoiConfig {
    pub fn resolve(&self, width: u32, height: u32) -> Result<Roi> {
        let roi = self.rect.unwrap_or_else(|| Roi::inset(width, height, self.border));
        roi.validate(width, height)?;
        Ok(roi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputConfig {
    /// Process every `stride`-th frame.
    pub stride: usize,
    /// Emit per-stage timings. Off by default so output is reproducible.
    pub timing: bool,
    /// Include the displacement field in each line.
    pub field: bool,
    /// Scale applied to marker vectors in annotated frames.
    pub vector_gain: f64,
    /// Frames processed concurrently per batch; 0 picks from the thread count.
    pub batch_size: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { stride: 1, timing: false, field: false, vector_gain: 3.0, batch_size: 0 }
    }
}

impl PipelineConfig {
    /// Parses TOML when the extension is `.toml`, JSON otherwise.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let is_toml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("toml"));
        let mut cfg = if is_toml { Self::from_toml(&text)? } else { Self::from_json(&text)? };
        // Relative calibration and reference paths are taken from the
        // config's directory.
        if let Some(dir) = path.parent() {
            if let CalibrationSource::File { file } = &mut cfg.calibration {
                if file.is_relative() {
                    *file = dir.join(&*file);
                }
            }
            if let ReferenceSource::File { path } = &mut cfg.reference.source {
                if path.is_relative() {
                    *path = dir.join(&*path);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.slip.validate()?;
        if !(self.matching.max_match_distance_mm > 0.0) {
            return Err(Error::Config("max_match_distance_mm must be positive".into()));
        }
        if self.blob.min_area > self.blob.max_area {
            return Err(Error::Config("blob.min_area exceeds blob.max_area".into()));
        }
        if self.output.stride == 0 {
            return Err(Error::Config("output.stride must be at least 1".into()));
        }
        if let ReferenceSource::FirstN { count: 0 } = self.reference.source {
            return Err(Error::Config("reference count must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.reference.min_marker_fraction) {
            return Err(Error::Config("min_marker_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}
