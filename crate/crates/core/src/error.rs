use std::io;

use thiserror::Error;

use crate::model::HeadKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not Hermitian positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("negative dual power q[{index}] = {value}")]
    NegativeWeight { index: usize, value: f64 },

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("channel of user {user} is identically zero")]
    ZeroChannel { user: usize },

    #[error("direct beamforming output is all zero; direction undefined")]
    DegenerateDirection,

    #[error("channel matrix is rank deficient; zero-forcing requires K <= M and full row rank")]
    RankDeficient,

    #[error("tape has already been differentiated")]
    TapeReused,

    #[error("loss must be a 1x1 scalar, got {rows}x{cols}")]
    NonScalarLoss { rows: usize, cols: usize },

    #[error("train-mode batch normalization needs a batch of at least 2, got {0}")]
    BatchTooSmall(usize),

    #[error("non-finite training loss at step {step} (sample {sample})")]
    NonFiniteLoss { step: usize, sample: usize },

    #[error("beams at step {step} miss the power budget by a relative {error:e}")]
    PowerViolation { step: usize, error: f64 },

    #[error("dataset line {line}: {msg}")]
    Dataset { line: usize, msg: String },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("parameter file, byte offset {offset}: {msg}")]
    ParamsFormat { offset: usize, msg: String },

    #[error("parameter file holds a {found} head, expected {expected}")]
    HeadMismatch { expected: HeadKind, found: HeadKind },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
