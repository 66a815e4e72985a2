//! Random-matrix partition functions, equilibrium measures and their large-N
//! expansions, cross-checked against exact map enumeration.

pub mod airy;
pub mod asymptotics;
pub mod combinatorics;
pub mod equilibrium;
pub mod finite_n;
pub mod error;
pub mod laurent;
pub mod quadrature;

pub use error::{Error, Result};
pub use laurent::LaurentPolynomial;
