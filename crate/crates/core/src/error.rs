use thiserror::Error;

use crate::domain::TwoPointMeasure;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid sample space: {0}")]
    InvalidSpace(String),

    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("mean {mu} lies outside the span of [{a}, {b}]")]
    MeanOutsideSpan { a: f64, b: f64, mu: f64 },

    #[error("bet {lambda} outside I_mu = [{lo}, {hi}]")]
    OutOfRange { lambda: f64, lo: f64, hi: f64 },

    #[error("not an e-variable: two-point measure {witness:?} has expectation {expectation}")]
    NotAnEVariable {
        witness: TwoPointMeasure,
        expectation: f64,
    },

    #[error("posterior has no mass left on the bet grid")]
    DegeneratePosterior,

    #[error("depth {depth} exceeds the supported maximum {max}")]
    DepthTooLarge { depth: usize, max: usize },

    #[error("point {0} is not on the sample grid")]
    OffGrid(f64),

    #[error("table shape mismatch: {0}")]
    Shape(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
