//! Contact information extraction for marker-based visuotactile sensors.
//!
//! Each frame goes through contact-area segmentation, red-marker blob
//! detection, nearest-neighbor matching against a no-contact reference,
//! shear-force mapping of the summed displacement field, and a rigid-motion
//! consistency check of the in-contact markers that flags incipient slip.
//!
//! Geometric and numeric types are generic over [`Real`] (`f32` or `f64`) and
//! default to `f64`; `*32` aliases below name the single-precision variants.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod imaging;
pub mod pipeline;
pub mod scalar;
pub mod segmentation;
pub mod shear;
pub mod slip;
pub mod tracking;

pub use error::{Error, Result};
pub use geometry::Point2;
pub use imaging::{BinaryMask, Frame, MarkerSet, Roi};
pub use pipeline::{ContactReport, Pipeline, PipelineConfig};
pub use scalar::Real;
pub use segmentation::ContactMask;
pub use shear::{ShearCalibration, ShearEstimate};
pub use slip::{RigidTransform2D, SlipConfig, SlipReport};
pub use tracking::{DisplacementField, KdTree};

pub type Point2f = Point2<f32>;
pub type MarkerSet32 = MarkerSet<f32>;
pub type DisplacementField32 = DisplacementField<f32>;
pub type KdTree32 = KdTree<f32>;
pub type RigidTransform32 = RigidTransform2D<f32>;
pub type ShearCalibration32 = ShearCalibration<f32>;
pub type ShearEstimate32 = ShearEstimate<f32>;
