//! Runs one scenario file. Flags given on the command line take precedence
//! over the values in the file.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use qndtomo::cli::{run_file, Backend, Overrides};

#[derive(Debug, Parser)]
#[command(version, about = "Simulate QND-coupled homodyne tomography from a scenario file")]
struct Args {
    /// Scenario file (TOML).
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; replaces `output_dir`.
    #[arg(long, value_name = "PATH")]
    out_dir: Option<String>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Shots per phase; 0 uses exact densities.
    #[arg(long, value_name = "N")]
    shots: Option<u64>,
    #[arg(long, value_enum)]
    backend: Option<Backend>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let overrides = Overrides {
        output_dir: args.out_dir,
        seed: args.seed,
        shots: args.shots,
        backend: args.backend,
    };
    match run_file(&args.config, &overrides) {
        Ok(outcome) => {
            let results = serde_json::to_string_pretty(&outcome.manifest.results).unwrap_or_default();
            let mut out = std::io::stdout().lock();
            let _ = writeln!(out, "wrote {}\n{results}", outcome.output_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
