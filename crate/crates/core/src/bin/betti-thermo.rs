use std::process::ExitCode;

use betti_thermo::cli::{run, Cli, ExperimentConfig};
use clap::Parser;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match ExperimentConfig::from_cli(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("betti-thermo: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config) {
        Ok(summary) => {
            println!("{}", summary.line);
            for f in &summary.files {
                eprintln!("wrote {}", f.display());
            }
            if summary.success {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("betti-thermo: {e}");
            ExitCode::FAILURE
        }
    }
}
