use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;

use toda::{commands, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    match commands::run(&cli, start) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("toda: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
