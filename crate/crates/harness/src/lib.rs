//! Experiment harness around `driftbench-core`: config parsing, protocol
//! runs, the on-disk artifact layout, CSV/text reports, and the run
//! manifest. The `driftbench` binary is a thin CLI over this library.

pub mod config;
pub mod error;
pub mod manifest;
pub mod record;
pub mod report;
pub mod runner;

pub use error::{HarnessError, Result};
