//! Circle domains, Schottky reflection groups and grid Beltrami solvers.

pub mod beltrami;
pub mod cantor;
pub mod error;
pub mod field;
pub mod geometry;
pub mod harness;
pub mod schottky;
pub mod solver;

pub use error::{Error, Result};
