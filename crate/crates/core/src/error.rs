use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("invalid tolerance {0}: must be positive")]
    InvalidTolerance(f64),

    #[error("series diverges at norm {norm} (radius of convergence {radius})")]
    Divergent { norm: f64, radius: f64 },

    #[error("predicted support of {predicted} atoms exceeds the cap of {cap}")]
    ResourceCap { predicted: u128, cap: u128 },

    #[error("exact computation supports d <= {limit}, got d = {d}")]
    DimensionCap { d: usize, limit: usize },

    #[error("lattice coordinate overflow in dimension {dim} (limit {limit})")]
    CoordinateOverflow { dim: usize, limit: u64 },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("root bracket failed: {0}")]
    Bracket(String),
}

pub type Result<T> = std::result::Result<T, Error>;
