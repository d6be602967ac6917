use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("level {level} is empty (|A_l| = 0)")]
    EmptyLevel { level: usize },
    #[error("magnetization is not on the grid at level {level}")]
    NotOnGrid { level: usize },
    #[error("singular Hessian: |m| = 1 at level {level}")]
    Saturated { level: usize },
    #[error("beta = {beta} <= beta_c = {beta_c}: not in metastable regime for any h")]
    NotMetastableRegime { beta: f64, beta_c: f64 },
    #[error("no negative eigenvalue: det A(t) >= 0 at the proposed saddle")]
    NoNegativeEigenvalue,
    #[error("hypothesis item {item} failed: {detail}")]
    Hypothesis { item: usize, detail: String },
    #[error("degenerate denominator 1 - beta sum a^2 omega (1 - x^2) = {0}")]
    DegenerateDenominator(f64),
    #[error("state space has {states} states, above the cap {cap}; reduce n or k")]
    StateSpaceTooLarge { states: u128, cap: usize },
    #[error("singular linear system: {0}")]
    Singular(String),
    #[error("linear solve residual {residual:e} above tolerance")]
    Residual { residual: f64 },
    #[error("simulation timed out after {steps} steps at time {time}")]
    Timeout { steps: u64, time: f64 },
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
