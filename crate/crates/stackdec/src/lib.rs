//! File formats, parallel drivers and the `stackdec` command line on top of
//! `stackdec-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod io;
pub mod manifest;
pub mod output;
pub mod parallel;

pub use error::{Error, Result};
