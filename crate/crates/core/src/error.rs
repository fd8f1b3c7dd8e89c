//! Crate-wide error type.

use alloc::string::String;
use core::fmt;

/// Errors reported by the numerical core.
#[derive(Debug, Clone, PartialEq)]
pub enum CoreError {
    /// A parameter is outside its admissible domain (σ ≤ 0, a ≤ 0, ...).
    InvalidParameter(String),
    /// Grid construction or grid/field pairing is inconsistent.
    InvalidGrid(String),
    /// Lattice spacing does not resolve the kernel width (h > width).
    ResolutionTooCoarse { h: f64, width: f64 },
    /// A column of the rate matrix has positive rate but no reachable cells.
    DegenerateColumn { column: usize },
    /// The detailed-balance rate integral vanishes.
    DegenerateKernel,
    /// The detailed-balance modulation is not strictly positive.
    NonPositiveModulation { x: f64 },
    /// Explicit time step exceeds the stability bound.
    StabilityBound { dt: f64, bound: f64 },
    /// Two fields do not share a grid.
    GridMismatch,
    /// The diffusive reference moment vanishes, so the ratio is undefined.
    UndefinedRatio,
    /// An iterative solver exhausted its iteration budget.
    IterationLimit(&'static str),
    /// A direct numerical procedure failed (singular factorization, ...).
    NumericalFailure(&'static str),
    /// A least-squares fit was rejected (e.g. non-decaying mass).
    FitRejected(String),
    /// An interval selects no grid cells.
    EmptyRegion,
}

impl fmt::Display for CoreError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CoreError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            CoreError::InvalidGrid(msg) => write!(f, "invalid grid: {msg}"),
            CoreError::ResolutionTooCoarse { h, width } => write!(
                f,
                "grid spacing h = {h} does not resolve kernel width {width}"
            ),
            CoreError::DegenerateColumn { column } => {
                write!(f, "rate-matrix column {column} has positive rate but no support on the grid")
            }
            CoreError::DegenerateKernel => write!(f, "detailed-balance rate integral is zero"),
            CoreError::NonPositiveModulation { x } => {
                write!(f, "detailed-balance modulation is not positive at x = {x}")
            }
            CoreError::StabilityBound { dt, bound } => {
                write!(f, "time step dt = {dt} exceeds the stability bound {bound}")
            }
            CoreError::GridMismatch => write!(f, "fields are defined on different grids"),
            CoreError::UndefinedRatio => write!(f, "diffusive moment vanishes; ratio undefined"),
            CoreError::IterationLimit(what) => write!(f, "{what}: iteration budget exhausted"),
            CoreError::NumericalFailure(what) => write!(f, "numerical failure: {what}"),
            CoreError::FitRejected(msg) => write!(f, "fit rejected: {msg}"),
            CoreError::EmptyRegion => write!(f, "region selects no grid cells"),
        }
    }
}

impl core::error::Error for CoreError {}

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, CoreError>;
