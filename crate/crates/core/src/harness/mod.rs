//! Experiment definitions and end-to-end pipelines: adaptive sampling per
//! morphing method, pROM construction, FOM-versus-pROM error sweeps over a
//! test grid, and CSV/JSON result files.
//!
//! Runs are single-threaded and deterministic: the same configuration and
//! seed give byte-identical CSV output.

mod config;
mod run;
mod timing;

pub use config::{
    parse_methods, Anchor, Checks, Experiment, FrequencyGrid, Method, PointCheck, Probe, TimingConfig,
};
pub use run::{
    choose_reference, evaluate_checks, full_order_model, generate_mesh, run_experiment, transform_checks,
    write_outputs, ExperimentResult, MethodSummary, SampleData, SampleStore, StageTimings, TestPointResult,
    TransformCheck,
};
pub use timing::{timing_report, TimingReport};
