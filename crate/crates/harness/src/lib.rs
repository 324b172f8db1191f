//! Experiment driver for Fisher-guided token selection: wires manifests and
//! pre-extracted features through ranking, selection, classifier fitting and
//! per-generator evaluation, and reproduces the standard ablations (token
//! strategies, top-K against random-K, robustness to corruptions).

pub mod cache;
pub mod config;
pub mod dataset;
pub mod error;
pub mod experiment;
pub mod report;
pub mod synth;

pub use config::{ExperimentConfig, KSpec};
pub use error::{HarnessError, Result, Stage};
pub use experiment::{
    robustness_sweep, run_experiment, token_strategy_sweep, topk_sweep, Pipeline, TopkRow, Variant,
};
pub use report::{ComparisonTable, EvalReport};
pub use synth::SyntheticBenchmark;
