//! Command-line front-end for `fredholm-core`: JSON run configurations,
//! named demo presets and CSV/JSON output for plotting.

pub mod args;
pub mod config;
pub mod demos;
pub mod run;

pub use config::{validate_config, Command, RunConfig};
pub use run::{execute, resolve, run, Diagnostics, RunOutput};

/// Every problem found while validating a configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "invalid configuration: {}", self.0.join("; "))
    }
}

impl std::error::Error for ConfigErrors {}
