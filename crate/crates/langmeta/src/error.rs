use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("minimizer search did not converge within {0} iterations")]
    NoConvergence(usize),
    #[error("degenerate minimum: lambda_min = {lambda_min:.6e} < m = {m:.6e}")]
    DegenerateMinimum { lambda_min: f64, m: f64 },
    #[error("dimension {0} too large for grid certification (max {1})")]
    DimensionTooLarge(usize, usize),
    #[error("trajectory diverged at iterate {0}")]
    Diverged(usize),
    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),
    #[error("matrix not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("admissibility fixpoint did not settle: {0}")]
    UnsatisfiableFixpoint(String),
    #[error("trajectory too short: need {needed} iterates, have {have}")]
    TrajectoryTooShort { needed: usize, have: usize },
    #[error("inadmissible (eta, beta) = ({eta:.6e}, {beta:.6e}): {reason}")]
    Inadmissible { eta: f64, beta: f64, reason: String },
    #[error("substep resolution too coarse: {0} < 4")]
    SubstepTooCoarse(usize),
    #[error("unknown oracle '{0}' (available: {1})")]
    UnknownOracle(String, String),
    #[error("population certificate missing: {0}")]
    PopulationCertificateMissing(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("config error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad trajectory file: {0}")]
    BadTrajectoryFile(String),
}
