//! Front end for the EIT/SPDC model: config parsing, figure presets, and
//! CSV/JSON rendering. The binary in `main.rs` is a thin wrapper.

pub mod config;
pub mod presets;
pub mod run;

pub use config::{parse_config, ConfigError, RawConfig, RunConfig};
pub use run::{execute, render, RunError};
