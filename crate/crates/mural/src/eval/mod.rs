//! Evaluation harness: synthetic data, quality metrics, spectral
//! clustering and multi-seed experiment reports.

pub mod experiments;
pub mod generate;
pub mod geodesic;
pub mod report;
pub mod spectral;

pub use experiments::{run_ablation, run_swissroll, Knob, SwissRollExperiment};
pub use report::{EvalReport, MetricSummary};
