//! Fisher-guided token selection (FGTS) over frozen vision-transformer
//! features.
//!
//! The crate is organised along the analysis pipeline:
//!
//! - [`format`], [`manifest`], [`validate`]: on-disk feature files and
//!   dataset manifests.
//! - [`stats`], [`ranking`]: per-token class statistics and Fisher ranking.
//! - [`select`]: top-K / random-K token selection and embedding aggregation.
//! - [`classify`]: centroid and linear-probe protocols.
//! - [`metrics`]: accuracy, ROC-AUC, average precision, per-generator tables.

pub mod classify;
pub mod error;
pub mod format;
pub mod layout;
pub mod manifest;
pub mod metrics;
pub mod ranking;
pub mod select;
pub mod stats;
pub mod synthetic;
pub mod tensor;
pub mod validate;

pub use error::{Error, Result};
pub use format::{read_feature_file, write_feature_file};
pub use layout::{Label, TokenLayout, TokenStrategy};
pub use manifest::{load_manifest, SampleManifest, SampleRecord, Split};
pub use ranking::{fisher_scores, TokenRanking};
pub use select::{aggregate, select_top_k, Embedding, SelectionConfig};
pub use stats::{compute_class_stats, ClassStats};
pub use tensor::FeatureTensor;
