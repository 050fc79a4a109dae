use std::process::ExitCode;

use clap::Parser;

fn main() -> ExitCode {
    let cli = cassl_cli::Cli::parse();
    match cassl_cli::run(cli) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("cassl: {e}");
            e.exit_code()
        }
    }
}
