//! Resampling AdaBoost with per-point weight traces, trace statistics,
//! entropy fields and an active-sampling harness.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the precision for common use.

pub mod analysis;
pub mod boosting;
pub mod data;
pub mod error;
pub mod field;
pub mod io;
pub mod rng;
pub mod sampling;
pub mod scalar;
pub mod tree;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Dataset64 = data::Dataset<f64>;
pub type Dataset32 = data::Dataset<f32>;
pub type Ensemble64 = boosting::Ensemble<f64>;
pub type Ensemble32 = boosting::Ensemble<f32>;
pub type TraceMatrix64 = boosting::TraceMatrix<f64>;
pub type TraceMatrix32 = boosting::TraceMatrix<f32>;
pub type BoostConfig64 = boosting::BoostConfig<f64>;
pub type BoostConfig32 = boosting::BoostConfig<f32>;
pub type TraceStats64 = analysis::TraceStats<f64>;
pub type TraceStats32 = analysis::TraceStats<f32>;
pub type EntropyField64 = field::EntropyField<f64>;
pub type EntropyField32 = field::EntropyField<f32>;
pub type FieldRaster64 = field::FieldRaster<f64>;
pub type FieldRaster32 = field::FieldRaster<f32>;
