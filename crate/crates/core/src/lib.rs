pub mod cli;
pub mod dynamics;
pub mod error;
pub mod problem;
pub mod solver;
pub mod stepsize;

pub use error::{Error, Result};
