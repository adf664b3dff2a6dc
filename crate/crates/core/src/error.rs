use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{quantity} must be {requirement}, got {value}")]
    Domain {
        quantity: &'static str,
        requirement: &'static str,
        value: f64,
    },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("shape mismatch: expected {expected} values, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("requested {requested} eigenpairs from an operator of dimension {dimension}")]
    EigenRange { requested: usize, dimension: usize },

    #[error("charge is not neutral: integral {integral:e} exceeds tolerance {tolerance:e}")]
    Neutrality { integral: f64, tolerance: f64 },

    #[error("invalid reduced state: {0}")]
    State(String),

    #[error("Landau level {n} exceeds basis maximum {nmax}")]
    LevelRange { n: usize, nmax: usize },

    #[error("phase-space grid does not cover the integrand: {0}")]
    Coverage(String),

    #[error("highest computed band {band} is occupied (g = {occupation:e}); increase nbands")]
    InsufficientBands { band: usize, occupation: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(quantity: &'static str, requirement: &'static str, value: f64) -> Self {
        Error::Domain {
            quantity,
            requirement,
            value,
        }
    }
}
