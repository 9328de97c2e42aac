//! File formats, missingness analysis, evaluation harness and command-line
//! front end for `mural-core` forests.

pub mod cli;
pub mod cohort;
pub mod config;
pub mod error;
pub mod eval;
pub mod io;
pub mod missingness;
pub mod pipeline;

pub use error::{MuralError, Result};
pub use mural_core as core;
