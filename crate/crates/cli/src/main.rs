use std::process::ExitCode;

use clap::Parser;
use echo_cli::{run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("echomem: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
