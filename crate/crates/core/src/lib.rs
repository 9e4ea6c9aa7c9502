//! Sparse linear discriminant analysis by thresholding.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod classify;
pub mod diagnostics;
pub mod error;
pub mod estimation;
pub mod evaluate;
pub mod io;
pub mod model;
pub mod numerics;
pub mod scalar;
pub mod simulate;

pub use classify::{
    build_lda, build_lda_known_factor, build_lda_known_sigma, build_oracle, build_oracle_multi, build_slda,
    build_slda_multi, classify, classify_multi, Classifier, SparsityReport,
};
pub use error::{Error, Result};
pub use model::{Dataset, Distribution, LinearRule, MultiRule, PopulationSpec, ThresholdConfig};
pub use scalar::Real;

pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type LinearRule64 = LinearRule<f64>;
pub type LinearRule32 = LinearRule<f32>;
pub type MultiRule64 = MultiRule<f64>;
pub type PopulationSpec64 = PopulationSpec<f64>;
pub type Matrix64 = numerics::Matrix<f64>;
