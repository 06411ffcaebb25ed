//! File formats, experiment orchestration and the `vinum` command line on
//! top of [`vinum_core`].

pub mod cli;
pub mod config;
pub mod dataio;
pub mod error;
pub mod experiment;
pub mod persist;
pub mod render;

pub use error::{Error, Result};
