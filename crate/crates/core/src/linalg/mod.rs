//! Vectors and matrices in structure-of-arrays form.
//!
//! [`DV`] and [`DM`] hold one primal array plus, per derivative layer, a
//! separate tangent array or a single tape node. They are never arrays of
//! [`D`](crate::D); reading an element builds a scalar view on demand.
//! Linear-algebra operations are intrinsics with their own forward and
//! reverse rules, and their constant kernels run on the active [`Backend`].

mod backend;
mod dense;
pub mod io;
mod matrix;
mod vector;

pub use backend::{backend, install_backend, Backend, NativeBackend};
pub use dense::Matrix;
pub use matrix::{reverse_sweep_m, DM};
pub use vector::{reverse_sweep_v, DV};

pub(crate) fn infallible<T>(r: crate::Result<T>) -> T {
    match r {
        Ok(v) => v,
        Err(e) => unreachable!("infallible intrinsic failed: {e}"),
    }
}
