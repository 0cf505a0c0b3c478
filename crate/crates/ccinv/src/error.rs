use thiserror::Error;

/// Errors shared by the whole crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix order must be at least 1")]
    EmptyMatrix,
    #[error("entry ({row}, {col}) is outside a {n}x{n} matrix")]
    IndexOutOfRange { row: usize, col: usize, n: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("zero diagonal at index {index}; the sweeps divide by c_ii")]
    ZeroDiagonal { index: usize },
    #[error(
        "negative diagonal at index {index}; the sweep scale sqrt(c_ii) is imaginary, \
         promote the matrix to complex"
    )]
    NegativeDiagonal { index: usize },
    #[error(
        "chains diverged at cycle {cycle} (iterate max-norm {norm:.3e}); \
         sp(T) >= 1 or sp(S) >= 1 is the likely cause"
    )]
    Diverged { cycle: usize, norm: f64 },
    #[error("non-finite sample at cycle {cycle}")]
    NonFiniteSample { cycle: usize },
    #[error(
        "burn-in did not couple within {max_cycles} cycles \
         (last relative difference {last_diff:.3e})"
    )]
    BurnInExceeded { max_cycles: usize, last_diff: f64 },
    #[error("solver did not converge within {iterations} iterations (change norm {change:.3e})")]
    NoConvergence { iterations: usize, change: f64 },
    #[error("BiCG breakdown at iteration {iteration} (inner product magnitude {magnitude:.3e})")]
    Breakdown { iteration: usize, magnitude: f64 },
    #[error("matrix is singular to working precision (pivot {pivot:.3e} at elimination step {step})")]
    Singular { step: usize, pivot: f64 },
    #[error("order {n} exceeds the dense oracle cap of {cap}")]
    OrderCap { n: usize, cap: usize },
    #[error("need at least {needed} samples, have {have}")]
    NotEnoughSamples { needed: usize, have: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("malformed Matrix Market file: {0}")]
    MatrixMarket(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("bad report file: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, Error>;
