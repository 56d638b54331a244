//! Generalized-function calculus on explicit-atlas manifolds.

pub mod asymptotics;
pub mod cli;
pub mod distributions;
pub mod dual;
pub mod error;
pub mod expr;
pub mod genfunc;
pub mod geometry;
pub mod kernels;
pub mod quadrature;
pub mod region;
pub mod testobjects;

pub use dual::MultiDual;
pub use error::{Error, Result};
