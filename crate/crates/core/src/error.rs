use thiserror::Error;

/// Every failure mode of the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("Gamma pole at x = {0}")]
    Pole(f64),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("accuracy not reached: {0}")]
    Accuracy(String),
    #[error("mu = {mu} is below mu0 = {mu0}")]
    SubcriticalMu { mu: f64, mu0: f64 },
    #[error("invalid instance: {0}")]
    InvalidInstance(String),
    #[error("exponent iteration diverged: {0}")]
    Overflow(String),
    #[error("iteration hypotheses violated: {0}")]
    HypothesisViolation(String),
    #[error("threshold unreachable: {0}")]
    Unreachable(String),
    #[error("not certifiable: {0}")]
    NotCertifiable(String),
    #[error("instance outside the recipe region: {0}")]
    Region(String),
    #[error("degenerate exponent: {0}")]
    Degenerate(String),
    #[error("verification failed at r = {radii:?}")]
    VerificationFailure { radii: Vec<f64> },
    #[error("rule manifest mismatch: {0}")]
    ManifestMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;
