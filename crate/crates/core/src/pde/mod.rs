//! Dirichlet problems for the Laplacian and the Pucci minimal operator.

mod operator;
mod solve;

pub use operator::*;
pub use solve::*;
