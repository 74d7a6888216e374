//! Configuration files, run manifests and the `fracouple` subcommands.

mod commands;
mod config;
mod manifest;

pub use commands::{run, Cli, Command, ERROR_PREFIX, WORKERS_ENV};
pub use config::{parse_config, parse_config_str, ParsedConfig, REQUIRED_KEYS};
pub use manifest::{file_digest, sha256_hex, Constants, OutputEntry, RunManifest};
