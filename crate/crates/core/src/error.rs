use alloc::string::String;

/// Errors raised by the moment engine and the quantities built on it.
///
/// [`Error::code`] returns a stable snake-case identifier that the command
/// line runner reports alongside partial results.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("hamiltonian matrix is not symmetric (max deviation {0:e})")]
    AsymmetricHamiltonian(f64),
    #[error("riccati_blowup: state norm exceeded {limit:e} at t = {t}")]
    RiccatiBlowup { t: f64, limit: f64 },
    #[error("tolerance_failure: step size {step:e} underflowed at t = {t}")]
    ToleranceFailure { t: f64, step: f64 },
    #[error("no_steady_state: {0}")]
    NoSteadyState(String),
    #[error("singular_linear_solve: {0}")]
    SingularLinearSolve(&'static str),
    #[error("not_positive_definite: matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("unpaired_spectrum: eigenvalues fail to pair (gap {gap:e})")]
    UnpairedSpectrum { gap: f64 },
    #[error("zero_step: finite-difference step must be nonzero")]
    ZeroStep,
    #[error("re_sigma_not_pd: real part of the covariance matrix is not positive definite")]
    ReSigmaNotPd,
    #[error("invalid_cm: smallest symplectic eigenvalue {min:e} is below 1")]
    InvalidCm { min: f64 },
    #[error("invalid_purity: replica trace {re} + {im}i is not a positive real")]
    InvalidPurity { re: f64, im: f64 },
    #[error("replica_cap_exceeded: {requested} replicas requested, cap is {cap}")]
    ReplicaCapExceeded { requested: usize, cap: usize },
    #[error("truncation_insufficient: top-level population {leakage:e} exceeds {limit:e}")]
    TruncationInsufficient { leakage: f64, limit: f64 },
    #[error("dimension_cap_exceeded: truncated dimension {dim} exceeds {cap}")]
    DimensionCapExceeded { dim: usize, cap: usize },
    #[error("zero_trace: operator trace vanishes")]
    ZeroTrace,
    #[error("non_integer_weights: counting weights must be integers")]
    NonIntegerWeights,
    #[error("grid_too_coarse: {0}")]
    GridTooCoarse(String),
    #[error("negative_qfi: finite-difference QFI estimate {0:e} is negative")]
    NegativeQfi(f64),
    #[error("imaginary_residue: {what} has imaginary part {value:e}")]
    ImaginaryResidue { what: &'static str, value: f64 },
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "dimension_mismatch",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::AsymmetricHamiltonian(_) => "asymmetric_hamiltonian",
            Error::RiccatiBlowup { .. } => "riccati_blowup",
            Error::ToleranceFailure { .. } => "tolerance_failure",
            Error::NoSteadyState(_) => "no_steady_state",
            Error::SingularLinearSolve(_) => "singular_linear_solve",
            Error::NotPositiveDefinite => "not_positive_definite",
            Error::UnpairedSpectrum { .. } => "unpaired_spectrum",
            Error::ZeroStep => "zero_step",
            Error::ReSigmaNotPd => "re_sigma_not_pd",
            Error::InvalidCm { .. } => "invalid_cm",
            Error::InvalidPurity { .. } => "invalid_purity",
            Error::ReplicaCapExceeded { .. } => "replica_cap_exceeded",
            Error::TruncationInsufficient { .. } => "truncation_insufficient",
            Error::DimensionCapExceeded { .. } => "dimension_cap_exceeded",
            Error::ZeroTrace => "zero_trace",
            Error::NonIntegerWeights => "non_integer_weights",
            Error::GridTooCoarse(_) => "grid_too_coarse",
            Error::NegativeQfi(_) => "negative_qfi",
            Error::ImaginaryResidue { .. } => "imaginary_residue",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;
