// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod convolve;
pub mod error;
pub mod exec;
pub mod field;
pub mod geometry;
pub mod io;
pub mod means;
pub mod pde;
pub mod rearrange;
pub mod verify;

pub use error::{Error, Result};
