use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("domain: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("sizing guard: {0}")]
    Sizing(String),
    #[error("no convergence after {iterations} iterations (best value {best}, gap bound {gap})")]
    NonConvergence { iterations: usize, best: f64, gap: f64 },
}

impl Error {
    pub fn is_sizing(&self) -> bool {
        matches!(self, Error::Sizing(_))
    }
}
