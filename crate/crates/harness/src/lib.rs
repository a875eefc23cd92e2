//! Experiment engine for adversarial robustness sweeps of predict-then-optimize
//! pipelines: tuned presets, training, attack sweeps, and CSV/SVG reports.

pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod plot;
pub mod presets;
pub mod report;
pub mod sweep;
pub mod train;

pub use config::{ExperimentConfig, MethodSettings};
pub use error::{HarnessError, Result};
pub use presets::ProblemPreset;
