use thiserror::Error;

/// Errors raised anywhere in the pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square ({rows} rows, row {row} has {cols} entries)")]
    NotSquare { rows: usize, row: usize, cols: usize },
    #[error("matrix must have at least one row")]
    Empty,
    #[error("determinant is {det}, expected 1")]
    NotUnimodular { det: i128 },
    #[error("dimension {n} exceeds the configured limit {limit}")]
    DimensionTooLarge { n: usize, limit: usize },
    #[error("spectrum mixes real and complex eigenvalues in dimension {n}; only all-real spectra or n = 2 are handled")]
    MixedSpectrumUnsupported { n: usize },
    #[error("matrix has an eigenvalue that is not real and positive: {0}")]
    NonPositiveSpectrum(String),
    #[error("no commuting sign correction exists: {0}")]
    SignPairingUnsupported(String),
    #[error("unknown variable index {index} (polynomial has {nvars} variables)")]
    UnknownVariable { index: usize, nvars: usize },
    #[error("linear system for G_{k} could not be solved: {reason}")]
    SolveFailure { k: usize, reason: String },
    #[error("eigenvalue of modulus one in a logarithmic slot: {0}")]
    UnitEigenvalueUnsupported(String),
    #[error("trace {trace} does not give a finite-order rotation")]
    NotFiniteOrderRotation { trace: i64 },
    #[error("operation requires a complex unit-circle spectrum in dimension 2")]
    NotRotation,
    #[error("operation requires an all-real spectrum")]
    NotRealSpectrum,
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("integration exceeded {0} steps")]
    TooManySteps(usize),
    #[error("tolerance {0} outside the admissible range [1e-14, 1e-4]")]
    ToleranceOutOfRange(f64),
    #[error("state lies on the singular set of an integral (|Q| = {q:e})")]
    SingularPoint { q: f64 },
    #[error("state is not on the unit bundle (2H - 1 = {defect:e})")]
    NotUnitBundle { defect: f64 },
    #[error("state is not on N^u or N^v")]
    NotOnInvariantSubmanifold,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
