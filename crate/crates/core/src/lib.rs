//! Lead-lag analysis of minute-level exchange-rate returns.
//!
//! The pipeline turns minute bars into log returns, filters lagged pairs by
//! zero-return scenario, tests lagged and partial correlation and Granger
//! causality with a Bonferroni correction, and ranks assets in the resulting
//! directed networks with PageRank.
//!
//! Numerical code is generic over [`Real`]; the `*F64` aliases fix the scalar
//! to `f64`, the precision used by the pipeline and the CLI.

// `!(x > 0)` is the NaN-rejecting test throughout; index loops mirror the algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod asset;
pub mod calendar;
pub mod config;
pub mod corr;
pub mod dataset;
pub mod error;
pub mod granger;
pub mod ingest;
pub mod moments;
pub mod netrank;
pub mod ols;
pub mod pipeline;
pub mod report;
pub mod returns;
pub mod scalar;
pub mod scenario;
pub mod special;
pub mod sweep;
pub mod synth;

pub use asset::AssetId;
pub use calendar::{Grid, Month, Span};
pub use config::Config;
pub use error::{Error, ErrorKind, Result};
pub use pipeline::{run_pipeline, RunSummary};
pub use scalar::Real;
pub use scenario::ScenarioId;
pub use sweep::{Estimator, EstimatorKind};

pub type ReturnSeriesF64 = returns::ReturnSeries<f64>;
pub type ReturnCellF64 = returns::ReturnCell<f64>;
pub type PairedSampleF64 = scenario::PairedSample<f64>;
pub type LaggedCorrF64 = corr::LaggedCorr<f64>;
pub type PartialCorrF64 = corr::PartialCorr<f64>;
pub type GrangerResultF64 = granger::GrangerResult<f64>;
pub type SigMatrixF64 = sweep::SigMatrix<f64>;
pub type AdfResultF64 = returns::AdfResult<f64>;
