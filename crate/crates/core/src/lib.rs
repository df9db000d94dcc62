//! Stable top-n recommendation with PureSVD and projector-splitting
//! incremental updates.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`] – CSR storage, thin QR and truncated SVD kernels.
//! * [`model`] – the factored low-rank state, full PureSVD training and the
//!   incremental projector-splitting step.
//! * [`recommend`] – projection scoring and top-n selection.
//! * [`metrics`] – HitRate, MRR, coverage and weighted-Jaccard stability.
//! * [`data`] – ingestion, filtering, binarization and the stepwise split.
//! * [`harness`] – the end-to-end experiment loop and report emission.

pub mod config;
pub mod data;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod metrics;
pub mod model;
pub mod recommend;
pub mod synth;

pub use config::{SvdOptions, Tolerances};
pub use data::{InteractionLog, InteractionMatrix, StepSplit};
pub use error::{Error, ErrorKind, Result};
pub use harness::{ExperimentConfig, ModelKind};
pub use linalg::{DenseMatrix, SparseMatrix};
pub use metrics::StepReport;
pub use model::FactorModel;
pub use recommend::RecommendationList;
