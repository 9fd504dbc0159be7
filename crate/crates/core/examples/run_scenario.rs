//! Runs a scenario file the same way the `qndtomo` binary does.
//!
//! cargo run --example run_scenario -- examples/configs/tomography_vacuum.toml

use std::path::PathBuf;

use qndtomo::cli::{run_file, verify_manifest, Overrides};

fn main() {
    let path: PathBuf = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/examples/configs/delta_vacuum.toml").into())
        .into();
    let overrides = Overrides {
        output_dir: Some(std::env::temp_dir().join("qndtomo-example").display().to_string()),
        ..Default::default()
    };
    match run_file(&path, &overrides) {
        Ok(out) => {
            println!("outputs in {}", out.output_dir.display());
            for (name, sum) in &out.manifest.outputs {
                println!("  {name}  {sum}");
            }
            println!("checksums verify: {:?}", verify_manifest(&out.output_dir));
            println!("{:#}", out.manifest.results);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
