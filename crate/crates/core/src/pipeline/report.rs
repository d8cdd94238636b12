use serde::{Deserialize, Serialize};

use crate::imaging::Contour;
use crate::shear::ShearEstimate;
use crate::slip::SlipReport;
use crate::tracking::DisplacementField;

/// Version of the JSON-lines schema written by [`ContactReport::to_json_line`].
pub const SCHEMA_VERSION: u32 = 1;

/// Per-stage wall time, microseconds. Stages partition `total`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StageTiming {
    pub segmentation: u64,
    pub blobs: u64,
    pub matching: u64,
    pub shear: u64,
    pub slip: u64,
    pub total: u64,
}

impl StageTiming {
    pub fn stage_sum(&self) -> u64 {
        self.segmentation + self.blobs + self.matching + self.shear + self.slip
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReportFlags {
    pub saturated: bool,
    pub insufficient_fit: bool,
    /// The external segmenter failed and the heuristic one stood in.
    pub segmenter_degraded: bool,
    /// A stage failed on this frame; the remaining fields hold neutral values.
    pub error: Option<String>,
}

/// Everything the pipeline learned from one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactReport {
    pub frame_index: u64,
    pub area_fraction: f64,
    pub contours: Vec<Contour>,
    pub shear: ShearEstimate,
    pub slip: SlipReport,
    pub field: DisplacementField,
    pub markers_found: usize,
    pub timing: StageTiming,
    pub flags: ReportFlags,
}

#[derive(Serialize)]
struct Line<'a> {
    v: u32,
    frame: u64,
    area_pct: f64,
    contours: Vec<LineContour<'a>>,
    shear: LineShear,
    slip: LineSlip<'a>,
    markers: usize,
    flags: &'a ReportFlags,
    timing_us: Option<&'a StageTiming>,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a DisplacementField>,
}

#[derive(Serialize)]
struct LineContour<'a> {
    hole: bool,
    /// Pixel-corner coordinates.
    points: &'a [[i32; 2]],
}

#[derive(Serialize)]
struct LineShear {
    sx: f64,
    sy: f64,
    mag: f64,
    saturated: bool,
}

#[derive(Serialize)]
struct LineSlip<'a> {
    flag: bool,
    outliers: &'a [usize],
    outlier_count: usize,
}

impl ContactReport {
    /// One JSON object, no trailing newline.
    pub fn to_json_line(&self, with_timing: bool, with_field: bool) -> String {
        let line = Line {
            v: SCHEMA_VERSION,
            frame: self.frame_index,
            area_pct: self.area_fraction,
            contours: self.contours.iter().map(|c| LineContour { hole: c.is_hole, points: &c.vertices }).collect(),
            shear: LineShear {
                sx: self.shear.force.x,
                sy: self.shear.force.y,
                mag: self.shear.magnitude,
                saturated: self.shear.saturated,
            },
            slip: LineSlip {
                flag: self.slip.slip,
                outliers: &self.slip.outlier_indices,
                outlier_count: self.slip.outlier_count,
            },
            markers: self.markers_found,
            flags: &self.flags,
            timing_us: with_timing.then_some(&self.timing),
            field: with_field.then_some(&self.field),
        };
        serde_json::to_string(&line).expect("report serializes")
    }
}
