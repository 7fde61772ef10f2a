use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("time {t} outside covered interval [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("step size underflow at t = {t}")]
    StepFailure { t: f64 },

    #[error("non-finite right-hand side at t = {t}")]
    NonFiniteRhs { t: f64 },

    #[error("integration stopped by guard at t = {t}")]
    GuardStop { t: f64 },

    #[error("empty evaluation grid")]
    EmptyGrid,

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("rank-deficient basis (smallest singular value ratio {0:e})")]
    RankDeficient(f64),

    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
