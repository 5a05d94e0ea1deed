use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A cost exceeded the Lipschitz budget of the learner receiving it.
    #[error("cost {cost} exceeds bound {bound}")]
    CostOutOfRange { cost: f64, bound: f64 },

    #[error("fixed-point bracket [{lo}, {hi}] does not straddle a root (h(lo) = {h_lo}, h(hi) = {h_hi})")]
    SolverDiverged {
        lo: f64,
        hi: f64,
        h_lo: f64,
        h_hi: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("noise tail index {tail_index} gives no finite moment of order {moment_power}")]
    MomentInfeasible { tail_index: f64, moment_power: f64 },

    #[error("unknown loss spec: {0}")]
    UnknownLossSpec(String),

    #[error("predict() must be called before update()")]
    NoPendingPrediction,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("malformed output: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        if err.is_io_error() {
            match err.into_kind() {
                csv::ErrorKind::Io(io) => Error::Io(io),
                other => Error::Format(format!("{other:?}")),
            }
        } else {
            Error::Format(err.to_string())
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(err.into())
        } else {
            Error::Format(err.to_string())
        }
    }
}
