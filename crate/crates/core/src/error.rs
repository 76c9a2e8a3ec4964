use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("dataset has no rows")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("design has {rows} rows but {columns} columns; need at least as many rows as columns")]
    TooFewRows { rows: usize, columns: usize },

    #[error("rank-deficient design: numerical rank {rank} < {columns} columns")]
    RankDeficient { rank: usize, columns: usize },

    #[error("linear program is infeasible")]
    Infeasible,

    #[error("simplex did not terminate within {0} iterations")]
    IterationLimit(usize),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("sampler failed: {0}")]
    Sampler(String),

    #[error("bootstrap replicate {replicate} stayed rank-deficient after {attempts} draws")]
    DegenerateResample { replicate: usize, attempts: usize },

    #[error("calibration probes are not monotone in omega")]
    NonMonotoneProbes,

    #[error("replication {rep} failed at tau = {tau}: {source}")]
    Replication {
        rep: usize,
        tau: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("{failed} of {total} replications failed; first failure: {first}")]
    Experiment {
        failed: usize,
        total: usize,
        first: Box<Error>,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
