use thiserror::Error;

/// Errors raised by the numerical routines.
///
/// Statistical outcomes (a probe that finds no witness, a classification
/// that is inconclusive) are values, not errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("diffusion matrix is not symmetric positive definite at {point:?}")]
    NotSpd { point: Vec<f64> },

    #[error("state {point:?} left the safe radius {radius} at time {time}")]
    SafeRadiusEscape { time: f64, point: Vec<f64>, radius: f64 },

    #[error("simulation left the safe radius {radius} at step {step}")]
    SimulationEscape { step: u64, radius: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("gradient of H disagrees with finite differences at {point:?} (relative error {rel_err:.3e})")]
    InconsistentGradient { point: Vec<f64>, rel_err: f64 },

    #[error("link gap {gap} exceeds tolerance {tol}")]
    LinkGap { gap: f64, tol: f64 },

    #[error("level set H = {level} not reached within duration {cap}")]
    LevelNotReached { level: f64, cap: f64 },

    #[error("chain seed {index} failed the limit check: {reason}")]
    ChainSeed { index: usize, reason: String },

    #[error("every optimizer start left the safe radius")]
    AllStartsDiverged,

    #[error("scan failed at epsilon = {epsilon}: {source}")]
    Scan { epsilon: f64, source: Box<Error> },

    #[error("csv export failed: {0}")]
    Export(String),
}

pub type Result<T> = std::result::Result<T, Error>;
