use thiserror::Error;

use crate::ising_exact::Ordering;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("{what}: {detail}")]
    Domain { what: &'static str, detail: String },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not antisymmetric (residual {residual:.3e})")]
    NotAntisymmetric { residual: f64 },

    /// A normal-mode value fell outside [0, 1] by more than the clamping
    /// tolerance; the input is not a valid correlation matrix.
    #[error("normal mode {value} lies outside [0, 1] beyond tolerance")]
    SpectrumOutOfRange { value: f64 },

    #[error("expected {expected:?} ordering, found {found:?}")]
    OrderingMismatch { expected: Ordering, found: Ordering },

    #[error("system of {requested} sites exceeds the limit of {limit}")]
    TooLarge { requested: usize, limit: usize },

    /// An imaginary part or pairing residual that should vanish did not;
    /// this signals a convention mismatch rather than round-off.
    #[error("residual {residual:.3e} exceeds tolerance {tolerance:.1e}: {context}")]
    Residual {
        context: &'static str,
        residual: f64,
        tolerance: f64,
    },

    #[error("truncation policy infeasible: {0}")]
    PolicyInfeasible(String),

    #[error("cut {cut} out of range 1..={max}")]
    CutOutOfRange { cut: usize, max: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(what: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        what,
        detail: detail.into(),
    }
}
