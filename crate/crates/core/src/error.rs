use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error in {what}: {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("sector mismatch: {0}")]
    SectorMismatch(String),
    #[error("cutoff mismatch: expected {expected}, found {found}")]
    CutoffMismatch { expected: usize, found: usize },
    #[error("potential assumption violated: {0}")]
    PotentialAssumption(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("constraint violation: {0}")]
    Constraint(String),
    #[error("stale mean-field blocks: assembled for stamp {assembled:#x}, state has {current:#x}")]
    StaleBlocks { assembled: u64, current: u64 },
    #[error("target not reached: {0}")]
    TargetUnreachable(String),
    #[error("oracle grid too large: n = {n}, limit {limit}")]
    OracleTooLarge { n: usize, limit: usize },
    #[error("checkpoint format: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
