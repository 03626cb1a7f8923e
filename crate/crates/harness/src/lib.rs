//! Configuration, drivers and output for the `floqcav` command-line tool.

pub mod analysis;
pub mod config;
pub mod output;
pub mod presets;
pub mod runs;
