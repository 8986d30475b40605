pub mod asym;
pub mod cli;
pub mod cell;
pub mod contour;
pub mod domain;
pub mod energy1d;
pub mod error;
pub mod expr;
pub mod field2d;
pub mod grid;
pub mod io;
pub mod montgomery;
pub mod plot;
pub mod poisson;
pub mod rng;
pub mod strip;
pub mod tridiag;

pub use error::{Error, Result};
