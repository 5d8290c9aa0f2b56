use thiserror::Error;

pub type Result<T> = std::result::Result<T, RsfError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RsfError {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },
    #[error("mode index {index} out of range for {n_modes} modes")]
    IndexOutOfRange { index: usize, n_modes: usize },
    #[error("mode sets overlap at mode {0}")]
    OverlappingModes(usize),
    #[error("projected state has trace {0:e}; entanglement is not accessible without ancillas")]
    TracelessState(f64),
    #[error("generator couples the two parties: {which}[{row},{col}] = {value:e}")]
    NonlocalGenerator {
        which: &'static str,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("mode {mode} is empty (occupation {occupation:e})")]
    EmptyMode { mode: usize, occupation: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid step size {0}")]
    StepSize(f64),
    #[error("non-finite value in {block} at t = {t}")]
    NonFinite { block: &'static str, t: f64 },
    #[error("matrix is not Hermitian (defect {0:e})")]
    HermiticityDefect(f64),
    #[error("Fock space of dimension {dim} exceeds the limit {limit}")]
    SpaceTooLarge { dim: usize, limit: usize },
    #[error("population {population:e} at the cutoff edge exceeds {threshold:e} at t = {t}")]
    Leakage {
        population: f64,
        threshold: f64,
        t: f64,
    },
    #[error("unsupported: {0}")]
    Unsupported(String),
}

pub(crate) fn dim_err(context: &'static str, expected: impl ToString, found: impl ToString) -> RsfError {
    RsfError::DimensionMismatch {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
