use thiserror::Error;

/// Failure modes of the simulation kernels.
///
/// Variants split into two families: precondition failures (bad inputs) and
/// numerical failures (drift, positivity, convergence). [`Error::is_numerical`]
/// tells them apart so front ends can map them onto distinct exit codes.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("time grid is not strictly increasing at index {index}")]
    NonMonotoneGrid { index: usize },
    #[error("time step {step} exceeds the allowed maximum {max}")]
    StepTooLarge { step: f64, max: f64 },
    #[error("argument outside validated range: {0}")]
    OutOfRange(String),
    #[error("operation requires exactly one switching window, got {0}")]
    WindowCount(usize),
    #[error("operation requires the {expected} scheme")]
    WrongScheme { expected: &'static str },
    #[error("trajectory ends at {end} but coverage up to {required} is required")]
    InsufficientCoverage { end: f64, required: f64 },
    #[error("norm drift {drift:e} at t = {t} exceeds threshold")]
    NormDrift { t: f64, drift: f64 },
    #[error("propagator unitarity drift {drift:e} exceeds threshold")]
    UnitarityDrift { drift: f64 },
    #[error("density matrix eigenvalue {min_eigenvalue:e} at t = {t} violates positivity")]
    Positivity { t: f64, min_eigenvalue: f64 },
    #[error("trace drift {drift:e} at t = {t} exceeds threshold")]
    TraceDrift { t: f64, drift: f64 },
    #[error("hermiticity defect {defect:e} at t = {t} exceeds threshold")]
    Hermiticity { t: f64, defect: f64 },
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("eigensolver did not converge for a matrix of dimension {dim}")]
    Eigensolver { dim: usize },
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NormDrift { .. }
                | Error::UnitarityDrift { .. }
                | Error::Positivity { .. }
                | Error::TraceDrift { .. }
                | Error::Hermiticity { .. }
                | Error::Quadrature(_)
                | Error::Eigensolver { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
