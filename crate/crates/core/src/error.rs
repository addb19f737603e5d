use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenealogyError {
    #[error("distance matrix is not ultrametric at ({0}, {1}, {2})")]
    NotUltrametric(usize, usize, usize),
    #[error("invalid distance {value} at ({row}, {col})")]
    InvalidDistance { row: usize, col: usize, value: f64 },
    #[error("negative or non-finite mass {value} at leaf {leaf}")]
    NegativeMass { leaf: usize, value: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("space has zero total mass")]
    EmptySpace,
    #[error("merge value {child} of a child exceeds its parent's merge value {parent}")]
    MergeOrder { child: f64, parent: f64 },
    #[error("malformed tree: {0}")]
    InvalidTree(String),
    #[error("exact evaluation needs {needed} tuple evaluations, budget is {budget}")]
    BudgetExceeded { needed: f64, budget: u64 },
    #[error("component {index} has diameter {diameter} > 2h = {bound}")]
    ComponentTooTall {
        index: usize,
        diameter: f64,
        bound: f64,
    },
    #[error("grafted top has diameter {diameter} > 2t = {bound}")]
    TopTooTall { diameter: f64, bound: f64 },
    #[error("graft base has zero total mass")]
    EmptyBase,
    #[error("metric map is not nondecreasing or does not fix 0")]
    NonMonotoneMap,
    #[error("polynomial needs leaf marks but the space is unmarked")]
    MarksRequired,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("serialization: {0}")]
    Serialization(String),
}

pub type Result<T, E = GenealogyError> = std::result::Result<T, E>;
