//! Emergency landing zone selection for UAVs from semantic segmentation maps,
//! with runtime monitors over the segmenter and a system-level evaluation
//! harness.
//!
//! The pipeline, in order:
//!
//! - [`camera`]: per-row ground footprint and pixel safety radius.
//! - [`segmentation`]: pluggable segmenter trait and a seeded noisy oracle.
//! - [`candidates`]: forbidden pixels, valid-pixel search, DBSCAN regions,
//!   K-means representatives and overlap pruning.
//! - [`hazard`]: candidate ranking by semantic and distance hazard.
//! - [`monitors`]: local high definition, classification hierarchy and
//!   Monte-Carlo dropout monitors.
//! - [`selection`]: the accept/reject loop with the parachute fallback.
//! - [`perturbation`]: seeded sensing faults for stress testing.
//! - [`evaluation`]: true hazard, monitor metrics, safety gains and reports.
//! - [`io`], [`synth`], [`cli`]: file formats, synthetic data and the `elz` tool.
//!
//! Runnable walkthroughs live in `examples/`.

pub mod camera;
pub mod candidates;
pub mod cli;
pub mod config;
pub mod error;
pub mod evaluation;
pub mod hash;
pub mod hazard;
pub mod io;
pub mod labels;
pub mod monitors;
pub mod perturbation;
pub mod segmentation;
pub mod selection;
pub mod synth;

pub use camera::{CameraModel, SafetyRadiusConfig};
pub use error::{Error, Result};
pub use labels::{CategoryId, Rect, SemanticMap, SoftmaxMap};
pub use segmentation::{Resolution, Segmenter, SegmenterSpec, SyntheticSegmenter};
