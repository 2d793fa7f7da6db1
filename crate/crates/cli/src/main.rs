use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = esc_cli::Cli::parse();
    match esc_cli::run(&cli) {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
