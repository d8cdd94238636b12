//! Synthetic visuotactile sensor.
//!
//! Renders a red marker grid over a gray membrane, displaced by contact shear
//! and optional local slip, with the contact region tinted by indent depth.
//! Every frame comes with exact ground truth. On top of the renderer sit a
//! labelled dataset generator, scripted frame sequences and a closed-loop
//! grasp demo driven by the core pipeline.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod grasp;
pub mod model;
pub mod render;
pub mod scenario;
pub mod scene;

pub use dataset::{generate_dataset, DatasetProtocol, Manifest};
pub use error::{SimError, SimResult};
pub use grasp::{run_demo, step_policy, Action, GraspPolicy, GraspScenario, GraspState, GraspTrace};
pub use model::SensorModel;
pub use render::{deformation_field, render_frame, GroundTruth};
pub use scenario::{Scenario, Segment};
pub use scene::{Contact, SceneSpec, Shape, SlipPatch};
