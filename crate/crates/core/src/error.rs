use thiserror::Error;

use crate::grid::Ordering;

#[derive(Debug, Error)]
pub enum Error {
    #[error("odd grid size {0}: every axis needs an even point count")]
    OddGridSize(usize),

    #[error("invalid grid parameter: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("ordering mismatch: expected {expected:?}, found {found:?}")]
    OrderingMismatch { expected: Ordering, found: Ordering },

    #[error("cannot convert between {from:?} and {to:?} orderings")]
    ClassicalConversion { from: Ordering, to: Ordering },

    #[error("index {index:?} out of range for grid shape {shape:?}")]
    IndexOutOfRange {
        index: Vec<usize>,
        shape: Vec<usize>,
    },

    #[error("non-finite sample at flat index {0}")]
    NonFinite(usize),

    #[error("degree {degree} exceeds the supported maximum {max}")]
    DegreeOverflow { degree: usize, max: usize },

    #[error("operator is not Hermitian (defect {0:e})")]
    NotHermitian(f64),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("Hamiltonian representation incompatible with method: {0}")]
    IncompatibleRep(String),

    #[error("field is not real after transform (imaginary residue {0:e})")]
    NotReal(f64),

    #[error("derivative order {order} too high for {points} points per axis")]
    Resolution { order: usize, points: usize },

    #[error("state has a singular Glauber-Sudarshan representation: {0}")]
    SingularP(String),

    #[error("time step {dt} exceeds the stability bound {bound:e}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("monitor breach at t = {t}: {what} = {value:e} > {tolerance:e}")]
    MonitorBreach {
        t: f64,
        what: &'static str,
        value: f64,
        tolerance: f64,
        snapshot: Option<Box<crate::grid::CharField>>,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed dump: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
