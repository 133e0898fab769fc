//! Std side of the probing harness: file formats, run configuration, the
//! staged pipeline and the `wsd` command line.

pub mod artifacts;
pub mod config;
pub mod fsutil;
pub mod pipeline;
pub mod tensor_io;

pub use config::RunConfig;
pub use pipeline::{Pipeline, RunOptions, Stage, StageError};
