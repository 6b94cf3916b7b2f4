//! Files, configuration, reports and the `hqtc` command line on top of
//! [`hqtc_core`].

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use config::{Profile, RunConfig};
pub use error::{ConfigError, FormatError, ToolError};
