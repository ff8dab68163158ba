use crate::scalar::C64;

/// Errors across the toolkit. Numerical failures carry whatever partial
/// result was computed so reports can still be written.
#[derive(Debug, Clone, thiserror::Error)]
pub enum Error {
    #[error("matrix is not an almost complex structure: |J^2 + Id| = {residual:.3e}")]
    NotAlmostComplex { residual: f64 },
    #[error("eigenspace of J is degenerate (rank defect {defect:.3e})")]
    DegenerateEigenspace { defect: f64 },
    #[error("value has mixed total degree")]
    MixedDegree,
    #[error("value has mixed bidegree")]
    MixedBidegree,
    #[error("ambient dimensions do not match")]
    DimensionMismatch,
    #[error("strongly positive decomposition has a negative weight {0}")]
    NegativeWeight(f64),
    #[error("value does not have the required bidegree ({0},{1})")]
    WrongBidegree(usize, usize),
    #[error("point lies outside the structure's validity domain")]
    DomainViolation,
    #[error("differentiation failed: {0}")]
    DifferentiationFailure(String),
    #[error("test form bidegree is not complementary to the current")]
    BidegreeMismatch,
    #[error(
        "quadrature failed to converge: estimate {value}, error {err:.3e} > tolerance {tol:.3e}"
    )]
    NonConvergence { value: C64, err: f64, tol: f64 },
    #[error("extrapolation unstable: last extrapolants differ by {rel:.2}%")]
    ExtrapolationUnstable { rel: f64 },
    #[error("current representation does not support this operator")]
    UnsupportedCurrent,
    #[error("nu(t)/t shows non-integrable growth on the grid (fitted exponent {exponent:.3})")]
    IntegrandBlowup { exponent: f64 },
    #[error("no monotonicity constant c <= {c_max:.1e} certifies the profile")]
    MonotoneFitFailure { c_max: f64 },
    #[error("stratification must be validated before building its current")]
    ValidationRequired,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
