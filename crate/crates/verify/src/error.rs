use genealab_core::GenealogyError;
use genealab_sim::SimError;
use thiserror::Error;

use crate::report::Report;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Genealogy(#[from] GenealogyError),
    #[error("invalid experiment: {0}")]
    InvalidConfig(String),
    #[error("event log does not cover the path: {0}")]
    LogGap(String),
    #[error("weight configuration does not match the path: {0}")]
    ParameterMismatch(String),
    #[error("effective sample size {ess:.1} is below the floor {floor}")]
    EffectiveSampleSizeTooLow { ess: f64, floor: f64 },
    #[error("kernel does not vanish at distance 2h = {boundary}")]
    KernelNotBoundaryVanishing { boundary: f64 },
    /// A replicate hit the particle cap; `partial` summarizes the others.
    #[error("{source} ({} checks on the completed replicates)", partial.checks.len())]
    Budget {
        source: SimError,
        partial: Box<Report>,
    },
}

pub type Result<T, E = VerifyError> = std::result::Result<T, E>;
