//! Nestable forward and reverse algorithmic differentiation.
//!
//! The crate exposes differentiation as higher-order functions over a
//! differentiable scalar [`D`], vector [`DV`] and matrix [`DM`]. Every
//! operator can be nested inside every other: each invocation tags the
//! perturbations it introduces, so inner and outer derivatives never mix.
//!
//! ```
//! use nestad::{diff, D};
//!
//! // d/dx ( x * d/dy (x + y) |_{y=1} ) |_{x=1}
//! let z = diff(
//!     |x: &D<f64>| x * diff(|y: &D<f64>| x + y, &D::from(1.0)),
//!     &D::from(1.0),
//! );
//! assert_eq!(z.value(), 1.0);
//! ```
//!
//! Modules:
//! - [`diffapi`]: the differentiation operators (`diff`, `grad`, `hessian`, ...).
//! - [`numdiff`]: finite-difference twins of the same operators over plain reals.
//! - [`linalg`]: structure-of-arrays vectors/matrices and compute backends.
//! - [`fixedpoint`]: a differentiable fixed-point iteration.
//! - [`optim`]: Newton's method and gradient descent on top of the API.
//! - [`bench`]: AD overhead measurements used by the `nestad-bench` binary.

pub mod bench;
pub mod compose;
pub mod diffapi;
mod error;
pub mod fixedpoint;
pub mod linalg;
pub mod numdiff;
pub mod optim;
mod real;
mod scalar;
mod tag;
mod tape;

pub use diffapi::*;
pub use error::{Error, Phase, Result};
pub use linalg::{Matrix, DM, DV};
pub use real::Real;
pub use scalar::{reverse_sweep, D};
pub use tag::Tag;
pub use tape::Tape;
