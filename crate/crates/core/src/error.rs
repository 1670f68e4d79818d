//! Crate-level error with a coarse classification used for exit codes.

use std::path::PathBuf;

use thiserror::Error;

use crate::config::ConfigError;
use crate::corr::CorrError;
use crate::dataset::DatasetError;
use crate::granger::GrangerError;
use crate::ingest::IngestError;
use crate::netrank::RankError;
use crate::returns::{AdfError, ReturnsError};
use crate::scenario::ScenarioError;
use crate::sweep::SweepError;
use crate::synth::SynthError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Bad configuration or arguments.
    Config,
    /// Unreadable, malformed or missing input data.
    Data,
    /// A numerical routine failed.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error(transparent)]
    Returns(#[from] ReturnsError),
    #[error(transparent)]
    Adf(#[from] AdfError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Corr(#[from] CorrError),
    #[error(transparent)]
    Granger(#[from] GrangerError),
    #[error(transparent)]
    Sweep(#[from] SweepError),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: std::io::Error },
    #[error("{stage}: {source}")]
    Stage { stage: String, source: Box<Error> },
}

impl Error {
    /// Wraps the error with the pipeline stage that raised it.
    pub fn at(self, stage: impl Into<String>) -> Error {
        Error::Stage { stage: stage.into(), source: Box::new(self) }
    }

    pub fn stage(&self) -> Option<&str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Config(_) => ErrorKind::Config,
            Error::Dataset(DatasetError::Pattern(_)) => ErrorKind::Config,
            Error::Dataset(_) | Error::Ingest(_) | Error::Returns(_) | Error::Output { .. } => ErrorKind::Data,
            Error::Scenario(ScenarioError::Unknown(_)) => ErrorKind::Config,
            Error::Scenario(_) => ErrorKind::Data,
            Error::Sweep(SweepError::Scenario(..) | SweepError::Unknown(_)) => ErrorKind::Config,
            Error::Sweep(SweepError::Extract(ScenarioError::Unknown(_))) => ErrorKind::Config,
            Error::Sweep(_) => ErrorKind::Data,
            Error::Rank(RankError::Damping(_)) => ErrorKind::Config,
            Error::Rank(RankError::NoConvergence { .. }) => ErrorKind::Numeric,
            Error::Rank(_) => ErrorKind::Data,
            Error::Synth(SynthError::Invalid(_) | SynthError::Unstable(_)) => ErrorKind::Config,
            Error::Synth(SynthError::Returns(_)) => ErrorKind::Data,
            Error::Synth(SynthError::NoConvergence(_)) => ErrorKind::Numeric,
            Error::Corr(CorrError::Scenario(_)) | Error::Granger(GrangerError::Scenario(_) | GrangerError::Depth(_)) => ErrorKind::Config,
            Error::Adf(_) | Error::Corr(_) | Error::Granger(_) => ErrorKind::Numeric,
            Error::Stage { source, .. } => source.kind(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
