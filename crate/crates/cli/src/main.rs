use std::io::Write;

use clap::Parser;
use toepexp_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        // a closed stdout (e.g. piped into `head`) is not an error
        Ok(report) => {
            let _ = writeln!(std::io::stdout(), "{}", report.to_json());
        }
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
    }
}
