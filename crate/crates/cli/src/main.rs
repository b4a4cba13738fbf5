use std::process::ExitCode;

use clap::Parser;

use nlbox_cli::{execute, RunConfig};

fn main() -> ExitCode {
    let cfg = RunConfig::parse();
    match execute(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nlbox: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
