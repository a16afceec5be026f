use thiserror::Error;

use crate::expr::{EvalError, ParseError};

#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error in `{field}`: {source}")]
    Parse {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("evaluation of `{field}` failed: {source}")]
    Eval {
        field: String,
        #[source]
        source: EvalError,
    },
    #[error("invalid grid {nx}x{nt}: need nx >= 9, nt >= 8 and nt even")]
    InvalidGrid { nx: usize, nt: usize },
    #[error("shape mismatch: expected {expected} values, found {found}")]
    ShapeMismatch { expected: usize, found: usize },
    #[error("non-finite values in {0}")]
    NonFinite(String),
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("standing assumptions violated: {}", .0.join("; "))]
    AssumptionsViolated(Vec<String>),
    #[error("time {tau} is outside the range [{lo}, {hi}] swept by the characteristic")]
    OutOfRange { tau: f64, lo: f64, hi: f64 },
    #[error("near resonance: boundary loop factor range [{q_min}, {q_max}] is within 1e-3 of 1")]
    NearResonance { q_min: f64, q_max: f64 },
    #[error("resonant problem: failed conditions {}", .0.join(", "))]
    Resonant(Vec<String>),
    #[error("dense system with {unknowns} unknowns exceeds the limit of {limit}")]
    TooLarge { unknowns: usize, limit: usize },
    #[error("dense collocation matrix is numerically singular (resonance)")]
    Singular,
    #[error("coefficient `{0}` depends on t")]
    TimeDependent(String),
    #[error("manufactured solution: {0}")]
    Manufacture(String),
    #[error("sweep instance eps = {eps} failed: {source}")]
    SweepInstance {
        eps: f64,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
