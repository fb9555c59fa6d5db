//! Battery scheduling runs on top of `fsdp-core`: configuration, file
//! formats and the `fsdp` command line.

pub mod cli;
pub mod config;
mod error;
pub mod io;

pub use error::{Error, Result};
