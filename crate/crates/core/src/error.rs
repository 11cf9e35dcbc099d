use num::BigUint;
use thiserror::Error;

use crate::pts::Rational;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown process `{0}`")]
    UnknownProcess(String),

    #[error("process `{process}` has {count} resolutions, above the limit of {limit}")]
    TooManyResolutions {
        process: String,
        count: BigUint,
        limit: usize,
    },

    #[error("weights sum to {sum}, expected 1")]
    NotADistribution { sum: Rational },

    #[error("weight {0} is outside (0, 1]")]
    WeightOutOfRange(Rational),

    #[error("distance to an empty set of formulae is undefined")]
    EmptyFormulaSet,

    #[error("invalid action name `{0}`")]
    InvalidAction(String),
}
