use thiserror::Error;

/// Errors shared by every kernel and quadrature routine in the crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum KernelError {
    #[error("kernel evaluated at its singular point")]
    SingularPoint,

    #[error("kernel evaluated on the diagonal x = y (|x - y| < {0:e})")]
    CoincidentPoints(f64),

    #[error("singular frequency xi = 0")]
    SingularFrequency,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quadrature did not converge: estimated error {estimate:e} above tolerance {tolerance:e}")]
    NonConvergence { estimate: f64, tolerance: f64 },

    #[error("evaluation point lies inside the coefficient sphere (|x| = {radius} <= S0 = {s0})")]
    PointInsideSphere { radius: f64, s0: f64 },

    #[error("mollifier support violates |y0| + eps < S0 ({lhs} >= {s0})")]
    SupportViolation { lhs: f64, s0: f64 },

    #[error("flow sample incomplete: {0}")]
    IncompleteSample(String),

    #[error("decay fit requires positive values, got {0}")]
    NonpositiveValue(f64),
}

pub type Result<T> = std::result::Result<T, KernelError>;
