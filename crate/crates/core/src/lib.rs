//! Coverings of scalar intervals by powers `lambda^{k_n}`, block-vector
//! approximation certificates for the operators `(lambda B)^{k_n}` on `l^2`,
//! a measure-based nonexistence certificate for sparse `(k_n)`, and
//! equidistribution checks for `k_n theta mod 1`.

pub mod approx;
pub mod covering;
pub mod error;
pub mod numeric;
pub mod seq;
pub mod shift;
pub mod torus;

pub use error::{Error, ErrorClass, Result};

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
