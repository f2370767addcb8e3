//! File formats, parallel experiment runner and command line for
//! `unmask-core`.

pub mod artifact;
pub mod cli;
pub mod error;
pub mod runner;
pub mod tables;

pub use error::{Error, Result};
