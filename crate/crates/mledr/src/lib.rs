//! Monte Carlo harness, rate fitting, file formats and the command-line
//! front end for [`mledr_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod montecarlo;
pub mod svg;

pub use error::{Error, Result};
