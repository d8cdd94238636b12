//! Per-frame orchestration: segmentation, marker extraction, matching against
//! the reference, then shear and slip when there is contact.

pub mod annotate;
pub mod config;
pub mod report;

pub use annotate::annotate;
pub use config::{CalibrationSource, MatchConfig, OutputConfig, PipelineConfig, ReferenceConfig, ReferenceSource, RoiConfig};
pub use report::{ContactReport, ReportFlags, StageTiming, SCHEMA_VERSION};

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::imaging::{extract_markers, BinaryMask, Frame, MarkerSet, Roi};
use crate::segmentation::{ContactMask, ExternalSegmenter, HeuristicConfig, HeuristicSegmenter, SegmenterConfig};
use crate::shear::{estimate_shear, ShearCalibration, ShearEstimate};
use crate::slip::{evaluate_slip, SlipReport};
use crate::tracking::{match_markers, DisplacementField};

/// Averages `frames` into the reference image and detects `b_0` on it.
///
/// Fails when too few markers are found, when far more markers than the grid
/// holds are found, or (for two or more frames) when any frame segments as
/// contact against the average.
pub fn init_reference(frames: &[Frame], cfg: &PipelineConfig) -> Result<(Frame, MarkerSet)> {
    if frames.is_empty() {
        return Err(Error::Init("no reference frames".into()));
    }
    let reference = Frame::mean(frames).map_err(|e| Error::Init(e.to_string()))?;
    let b0: MarkerSet = extract_markers(&reference, &cfg.threshold, &cfg.marker_morphology, &cfg.blob)?;
    let expected = cfg.reference.expected_markers;
    let min = (cfg.reference.min_marker_fraction * expected as f64).ceil() as usize;
    let max = expected + expected / 10;
    if b0.len() < min || (expected > 0 && b0.len() > max) {
        return Err(Error::Init(format!("found {} markers, expected {expected}", b0.len())));
    }
    if frames.len() > 1 {
        let roi = cfg.roi.resolve(reference.width(), reference.height())?;
        let seg = HeuristicSegmenter::new(reference.clone(), heuristic_config(&cfg.segmenter), cfg.threshold, roi)?;
        for f in frames {
            let area = crate::segmentation::area_fraction(&seg.mask(f)?, &roi)?;
            if area > 0.0 {
                return Err(Error::Init(format!("reference frame {} shows {area:.2}% contact", f.index)));
            }
        }
    }
    Ok((reference, b0))
}

fn heuristic_config(cfg: &SegmenterConfig) -> HeuristicConfig {
    match cfg {
        SegmenterConfig::Heuristic(h) => h.clone(),
        SegmenterConfig::External(_) => HeuristicConfig::default(),
    }
}

/// Per-run state shared by concurrent frame workers.
#[derive(Debug)]
struct Stages {
    cfg: PipelineConfig,
    calibration: ShearCalibration,
    reference: Frame,
    b0: MarkerSet,
    roi: Roi,
    max_match_px: f64,
    heuristic: HeuristicSegmenter,
    fallback: bool,
}

/// Reference state, stage settings and the optional external segmenter.
#[derive(Debug)]
pub struct Pipeline {
    stages: Stages,
    external: Option<ExternalSegmenter>,
}

impl Pipeline {
    /// Builds the pipeline from no-contact frames.
    pub fn new(cfg: PipelineConfig, reference_frames: &[Frame]) -> Result<Self> {
        cfg.validate()?;
        let (reference, b0) = init_reference(reference_frames, &cfg)?;
        Self::with_reference(cfg, reference, b0)
    }

    pub fn with_reference(cfg: PipelineConfig, reference: Frame, b0: MarkerSet) -> Result<Self> {
        cfg.validate()?;
        let calibration = cfg.calibration.resolve(None)?;
        let roi = cfg.roi.resolve(reference.width(), reference.height())?;
        let heuristic = HeuristicSegmenter::new(reference.clone(), heuristic_config(&cfg.segmenter), cfg.threshold, roi)?;
        let (external, fallback) = match &cfg.segmenter {
            SegmenterConfig::External(e) => (Some(ExternalSegmenter::from_config(e)?), e.fallback_to_heuristic),
            SegmenterConfig::Heuristic(_) => (None, false),
        };
        let max_match_px = cfg.matching.max_match_distance_mm * calibration.px_per_mm;
        let stages = Stages { cfg, calibration, reference, b0, roi, max_match_px, heuristic, fallback };
        Ok(Self { stages, external })
    }

    /// Replaces the external segmenter, e.g. with one over custom streams.
    pub fn set_external(&mut self, seg: Option<ExternalSegmenter>, fallback_to_heuristic: bool) {
        self.external = seg;
        self.stages.fallback = fallback_to_heuristic;
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.stages.cfg
    }

    pub fn calibration(&self) -> &ShearCalibration {
        &self.stages.calibration
    }

    pub fn reference(&self) -> &Frame {
        &self.stages.reference
    }

    pub fn reference_markers(&self) -> &MarkerSet {
        &self.stages.b0
    }

    pub fn roi(&self) -> Roi {
        self.stages.roi
    }

    /// Largest accepted marker displacement, pixels.
    pub fn max_match_px(&self) -> f64 {
        self.stages.max_match_px
    }

    /// Processes one frame. Stage failures are reported in
    /// [`ContactReport::flags`] rather than returned.
    pub fn process_frame(&mut self, frame: &Frame) -> ContactReport {
        self.stages.process(frame, self.external.as_mut())
    }

    /// Processes `frames` concurrently when the segmenter allows it; reports
    /// come back in input order.
    pub fn process_batch(&mut self, frames: &[Frame]) -> Vec<ContactReport> {
        if self.external.is_some() {
            return frames.iter().map(|f| self.process_frame(f)).collect();
        }
        let stages = &self.stages;
        frames.par_iter().map(|f| stages.process(f, None)).collect()
    }

    /// Runs `frames` through the pipeline in batches, honoring the output
    /// stride, and hands each `(frame, report)` to `sink` in frame order.
    /// Source errors abort the run; per-frame errors only flag the report.
    pub fn run_sequence<I, S>(&mut self, frames: I, mut sink: S) -> Result<RunSummary>
    where
        I: IntoIterator<Item = Result<Frame>>,
        S: FnMut(&Frame, &ContactReport) -> Result<()>,
    {
        let batch = match self.stages.cfg.output.batch_size {
            0 => 2 * rayon::current_num_threads(),
            n => n,
        };
        let stride = self.stages.cfg.output.stride;
        let mut summary = RunSummary::default();
        let start = Instant::now();
        let mut pending = Vec::with_capacity(batch);
        let mut flush = |this: &mut Self, pending: &mut Vec<Frame>, summary: &mut RunSummary| -> Result<()> {
            for (f, r) in pending.iter().zip(this.process_batch(pending)) {
                summary.add(&r);
                sink(f, &r)?;
            }
            pending.clear();
            Ok(())
        };
        for (i, frame) in frames.into_iter().enumerate() {
            let frame = frame?;
            if i % stride != 0 {
                continue;
            }
            pending.push(frame);
            if pending.len() == batch {
                flush(self, &mut pending, &mut summary)?;
            }
        }
        flush(self, &mut pending, &mut summary)?;
        summary.wall_seconds = start.elapsed().as_secs_f64();
        Ok(summary)
    }
}

impl Stages {
    fn process(&self, frame: &Frame, external: Option<&mut ExternalSegmenter>) -> ContactReport {
        let start = Instant::now();
        let mut flags = ReportFlags::default();
        let mut errors: Vec<String> = Vec::new();
        let mut marks = [0u64; 5];
        let mut mark = |stage: usize, start: &Instant| marks[stage] = start.elapsed().as_micros() as u64;

        let mask = match external {
            None => self.heuristic.mask(frame),
            Some(ext) => match ext.mask(frame) {
                Ok(m) => Ok(m),
                Err(e) if self.fallback => {
                    log::warn!("frame {}: {e}; using heuristic segmenter", frame.index);
                    flags.segmenter_degraded = true;
                    self.heuristic.mask(frame)
                }
                Err(e) => {
                    flags.segmenter_degraded = true;
                    Err(e)
                }
            },
        };
        let contact = mask.and_then(|m| ContactMask::from_mask(m, self.roi)).unwrap_or_else(|e| {
            errors.push(format!("segmentation: {e}"));
            ContactMask {
                mask: BinaryMask::new(frame.width(), frame.height()),
                contours: Vec::new(),
                area_fraction: 0.0,
                roi: self.roi,
            }
        });
        mark(0, &start);

        let markers: MarkerSet =
            extract_markers(frame, &self.cfg.threshold, &self.cfg.marker_morphology, &self.cfg.blob).unwrap_or_else(|e| {
                errors.push(format!("markers: {e}"));
                MarkerSet::empty(frame.index)
            });
        mark(1, &start);

        let field = match_markers(&self.b0, &markers, self.max_match_px);
        mark(2, &start);

        let (shear, slip) = if contact.area_fraction > 0.0 {
            let shear = estimate_shear(&field, &self.calibration, self.b0.len()).unwrap_or_else(|e| {
                errors.push(format!("shear: {e}"));
                ShearEstimate::zero()
            });
            mark(3, &start);
            let slip = evaluate_slip(&contact, &field, &self.cfg.slip);
            (shear, slip)
        } else {
            mark(3, &start);
            (ShearEstimate::zero(), SlipReport::none())
        };
        mark(4, &start);

        flags.saturated = shear.saturated;
        flags.insufficient_fit = slip.insufficient_fit;
        if !errors.is_empty() {
            flags.error = Some(errors.join("; "));
        }
        let timing = StageTiming {
            segmentation: marks[0],
            blobs: marks[1] - marks[0],
            matching: marks[2] - marks[1],
            shear: marks[3] - marks[2],
            slip: marks[4] - marks[3],
            total: marks[4],
        };
        ContactReport {
            frame_index: frame.index,
            area_fraction: contact.area_fraction,
            contours: contact.contours,
            shear,
            slip,
            field,
            markers_found: markers.len(),
            timing,
            flags,
        }
    }
}

/// Aggregate counts and timing over a run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub frames: usize,
    pub contact_frames: usize,
    pub slip_frames: usize,
    pub flagged_frames: usize,
    pub stage_totals: StageTiming,
    pub wall_seconds: f64,
}

impl RunSummary {
    fn add(&mut self, r: &ContactReport) {
        self.frames += 1;
        self.contact_frames += usize::from(r.area_fraction > 0.0);
        self.slip_frames += usize::from(r.slip.slip);
        self.flagged_frames += usize::from(r.flags.error.is_some() || r.flags.segmenter_degraded);
        let t = &mut self.stage_totals;
        t.segmentation += r.timing.segmentation;
        t.blobs += r.timing.blobs;
        t.matching += r.timing.matching;
        t.shear += r.timing.shear;
        t.slip += r.timing.slip;
        t.total += r.timing.total;
    }

    /// Frames per second of wall time.
    pub fn fps(&self) -> f64 {
        if self.wall_seconds > 0.0 {
            self.frames as f64 / self.wall_seconds
        } else {
            0.0
        }
    }

    /// Mean per-frame latency of each stage, microseconds.
    pub fn mean_stage_us(&self) -> [(&'static str, f64); 6] {
        let n = self.frames.max(1) as f64;
        let t = &self.stage_totals;
        [
            ("segmentation", t.segmentation as f64 / n),
            ("blobs", t.blobs as f64 / n),
            ("matching", t.matching as f64 / n),
            ("shear", t.shear as f64 / n),
            ("slip", t.slip as f64 / n),
            ("total", t.total as f64 / n),
        ]
    }
}

/// Convenience for callers that only need the field of a frame.
pub fn displacement_of(pipeline: &Pipeline, frame: &Frame) -> Result<DisplacementField> {
    let cfg = pipeline.config();
    let markers: MarkerSet = extract_markers(frame, &cfg.threshold, &cfg.marker_morphology, &cfg.blob)?;
    Ok(match_markers(pipeline.reference_markers(), &markers, pipeline.max_match_px()))
}
