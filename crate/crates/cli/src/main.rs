use std::process::ExitCode;

use sav_mhd_cli::{execute, parse_config, ConfigError, EXIT_CONFIG};

fn main() -> ExitCode {
    match parse_config(std::env::args_os()) {
        Ok(config) => ExitCode::from(execute(&config)),
        Err(ConfigError::Flags(e)) => e.exit(),
        Err(e) => {
            eprintln!("usage error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
