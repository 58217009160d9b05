use std::io;

use thiserror::Error;

/// Errors produced by the codec, decoder, planner and harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown base graph `{0}` (expected 1 or 2)")]
    UnknownBaseGraph(String),

    #[error("lifting size Z={0} is not in the lifting set {{a*2^j : a in 2,3,5,7,9,11,13,15; Z <= 384}}")]
    InvalidLiftingSize(usize),

    #[error("malformed base graph asset {asset}: {reason}")]
    MalformedAsset { asset: String, reason: String },

    #[error("base graph asset {asset}: expected {expected} entries, found {found}")]
    EntryCountMismatch {
        asset: String,
        expected: usize,
        found: usize,
    },

    #[error("rows_used={rows} out of range {min}..={max}")]
    RowsOutOfRange { rows: usize, min: usize, max: usize },

    #[error("expanded matrix has {entries} entries, above the oracle limit {limit}")]
    OracleLimit { entries: usize, limit: usize },

    #[error("length mismatch: expected {expected}, got {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("parity core is singular for this shift set; the base graph asset is corrupt")]
    SingularParityCore,

    #[error("payload of {payload} bits plus {crc} CRC bits exceeds K={k}")]
    PayloadTooLong {
        payload: usize,
        crc: usize,
        k: usize,
    },

    #[error("noise standard deviation must be positive, got {0}")]
    InvalidSigma(f64),

    #[error("alpha={0} is not a power of two in 1..=32")]
    InvalidAlpha(usize),

    #[error("{numerator} is not divisible by rho={rho}")]
    NotDivisible { numerator: usize, rho: usize },

    #[error("worker budget {budget} is below the minimum Z/rho = {minimum}")]
    BudgetTooSmall { budget: usize, minimum: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
