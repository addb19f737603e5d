use genealab_core::GenealogyError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("invalid kernel: {0}")]
    InvalidKernel(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("population is empty")]
    ZeroPopulation,
    #[error("inconsistent ancestry: {0}")]
    InconsistentAncestry(String),
    #[error("particle budget {cap} exceeded at time {time}")]
    ParticleBudgetExceeded { cap: usize, time: f64 },
    #[error("mass path does not cover [0, {horizon}] (covers [{start}, {end}])")]
    MassPathGap { start: f64, end: f64, horizon: f64 },
    #[error("polynomial order {found} does not match the {expected} dual lines")]
    OrderMismatch { expected: usize, found: usize },
    #[error("initial space has no mass at location {0}")]
    EmptyLocation(u32),
    #[error("malformed input: {0}")]
    Parse(String),
    #[error(transparent)]
    Genealogy(#[from] GenealogyError),
}

pub type Result<T, E = SimError> = std::result::Result<T, E>;
