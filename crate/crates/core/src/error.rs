use std::path::PathBuf;

use thiserror::Error;

/// Errors raised by the imbalance toolkit.
///
/// Every variant belongs to one module (see [`Error::module`]) and some carry
/// a remedy hint for command-line users (see [`Error::hint`]).
#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),

    #[error("duplicate column name: {0}")]
    DuplicateColumn(String),

    #[error("unknown column: {0}")]
    UnknownColumn(String),

    #[error("name collision: {0}")]
    NameCollision(String),

    #[error("insufficient rows: {found} usable, at least {required} required")]
    InsufficientRows { found: usize, required: usize },

    #[error("zero variance: {0}")]
    ZeroVariance(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("invalid synthetic dataset request: {0}")]
    InvalidSynth(String),

    #[error("invalid distance spec: {0}")]
    InvalidSpec(String),

    #[error("distance matrix for N={n} needs {required} bytes, above the limit of {limit} bytes")]
    MemoryLimit { n: usize, required: u128, limit: u128 },

    #[error("size mismatch: expected {expected} points, found {found}")]
    SizeMismatch { expected: usize, found: usize },

    #[error("neighbor depth k={k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },

    #[error("index out of range: {index} (N={n})")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("rank of a point relative to itself is undefined (i=j={0})")]
    SelfPair(usize),

    #[error("degenerate distance measure: all pairwise distances are tied")]
    DegenerateDistance,

    #[error("invalid thresholds: {0}")]
    InvalidThresholds(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("budget exceeded: {required} subset evaluations requested, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    #[error("invalid lag setup: {0}")]
    InvalidLag(String),

    #[error("duplicate (group, time) key: ({group}, {time})")]
    DuplicateKey { group: String, time: i64 },
}

impl Error {
    /// Name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            Io { .. }
            | Csv(_)
            | DuplicateColumn(_)
            | UnknownColumn(_)
            | NameCollision(_)
            | InsufficientRows { .. }
            | ZeroVariance(_)
            | InvalidDataset(_)
            | InvalidSynth(_) => "dataset",
            InvalidSpec(_) | MemoryLimit { .. } => "metric",
            SizeMismatch { .. } | KOutOfRange { .. } | IndexOutOfRange { .. } | SelfPair(_) => "rank",
            DegenerateDistance | InvalidThresholds(_) => "imbalance",
            InvalidParameter(_) | BudgetExceeded { .. } => "select",
            InvalidLag(_) | DuplicateKey { .. } => "lag",
        }
    }

    /// A short suggestion for how to get past the error, when one exists.
    pub fn hint(&self) -> Option<&'static str> {
        use Error::*;
        match self {
            MemoryLimit { .. } => Some("subsample the dataset or raise the memory limit"),
            BudgetExceeded { .. } => Some("use the greedy strategy or lower the maximum subset size"),
            DegenerateDistance => Some("drop constant or heavily discretized features from the space"),
            ZeroVariance(_) => Some("remove the constant column before standardizing"),
            InsufficientRows { .. } => Some("at least 3 complete rows are needed"),
            UnknownColumn(_) => Some("check the header names; ranges use a:b over header order"),
            KOutOfRange { .. } => Some("k must be at least 1 and at most N-2"),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
