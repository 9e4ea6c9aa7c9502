//! Normal-distribution functions, random streams, samplers and symmetric
//! factorizations.

pub mod cholesky;
pub mod eigen;
pub mod matrix;
pub mod normal;
pub mod rng;
pub mod sampling;
pub mod sparse;

pub use cholesky::{cholesky_spd, SpdFactor};
pub use eigen::{eigen_sym, EigenSym};
pub use matrix::Matrix;
pub use normal::{mills_log_bounds, std_normal_cdf, std_normal_log_tail, std_normal_pdf};
pub use rng::RngStream;
pub use sampling::{sample_mvn, sample_mvt};
pub use sparse::SparseSymMatrix;
