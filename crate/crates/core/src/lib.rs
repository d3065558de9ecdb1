//! Exact compound Poisson approximation on the lattice `ℤ₊^d`: sparse signed
//! measures, the generalized multinomial model with its signed-measure
//! corrections `G_ℓ`, closed-form total variation bounds, the smoothness
//! inequalities behind them, and the point-process variants.
//!
//! Lattice quantities are full total variation norms `‖·‖`; the point-process
//! module reports distances `d_TV = ‖·‖/2`.

pub mod bounds;
pub mod error;
pub mod measure;
pub mod model;
pub mod pointprocess;
pub mod sample;
pub mod scalar;
pub mod smoothness;
mod special;
pub mod verify;

pub use bounds::{BoundInputs, BoundKind, BoundReport, OrderConstants};
pub use error::{Error, Result};
pub use measure::{LatticePoint, SeriesSpec};
pub use model::{CorrectionOrder, ExactConfig};
pub use scalar::Scalar;
pub use verify::{Suite, SuiteReport, VerifyOptions};

pub type SignedMeasure = measure::SignedMeasure<f64>;
pub type ModelSpec = model::ModelSpec<f64>;
pub type ExactTvResult = model::ExactTvResult<f64>;
pub type SmoothnessInstance = smoothness::SmoothnessInstance<f64>;
pub type PointProcessSpec = pointprocess::PointProcessSpec<f64>;
