//! Command-line front end for the `sav-mhd` solver.
//!
//! `parse_config` merges flags over a flat `key = value` file; `execute`
//! runs the configuration and writes a CSV or JSON report.

pub mod config;
pub mod run;

use std::io::Write;

pub use config::{parse_config, ConfigError, Format, Mode, RunConfig};
pub use run::{render, ErrorRecord, Rendered, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};

/// Runs `config`, writes the report to its output (standard output when
/// unset) and returns the exit code.
pub fn execute(config: &RunConfig) -> u8 {
    let rendered = render(config);
    let written = match &config.output {
        Some(path) => std::fs::write(path, &rendered.text),
        None => std::io::stdout().lock().write_all(rendered.text.as_bytes()),
    };
    match written {
        Ok(()) => rendered.exit_code,
        Err(e) => {
            let target = config
                .output
                .as_ref()
                .map_or("standard output".into(), |p| p.display().to_string());
            eprintln!("error: cannot write {target}: {e}");
            EXIT_CONFIG
        }
    }
}

#[cfg(doctest)]
#[doc = include_str!("../../../book/src/cli.md")]
mod guide {}
