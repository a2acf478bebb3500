use std::process::ExitCode;

use clap::Parser;

mod commands;

use commands::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("solenoid-lab: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
