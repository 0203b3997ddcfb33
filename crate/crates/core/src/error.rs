use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("no tree decomposition of width at most {0}")]
    NoDecomposition(usize),
    #[error("invalid encoding: {0}")]
    Invalid(String),
    #[error("partial valuation: no value for fact {0}")]
    PartialValuation(String),
    #[error("invalid label: {0}")]
    InvalidLabel(String),
    #[error("state cap of {0} exceeded")]
    StateBlowup(usize),
    #[error("polynomial exceeds the cap of {0} monomials")]
    SizeCap(usize),
    #[error("circuits are not stitchable: {0}")]
    NotStitchable(String),
    #[error("automaton is not monotone: {0}")]
    NotMonotone(String),
    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),
    #[error("syntax error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("invalid input: {0}")]
    Input(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }
}
