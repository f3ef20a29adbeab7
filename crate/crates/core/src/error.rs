use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A zero test or rank decision could not be made at the tracked precision.
    #[error("insufficient precision: {0}")]
    InsufficientPrecision(String),
    #[error("zero has no valuation: {0}")]
    ZeroValuation(String),
    #[error("not a unit: {0}")]
    NotAUnit(String),
    #[error("phi is not mixed Tate: {0}")]
    NotMixedTatePhi(String),
    #[error("module is not mixed Tate: {0}")]
    NotMixedTate(String),
    #[error("wrong shape: {0}")]
    WrongShape(String),
    #[error("not unipotent: {0}")]
    NotUnipotent(String),
    #[error("not a real mixed Tate Hodge structure: {0}")]
    NotMths(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid(_) => 2,
            Error::InsufficientPrecision(_) => 3,
            _ => 4,
        }
    }
}
