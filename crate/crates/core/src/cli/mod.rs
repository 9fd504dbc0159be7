//! Scenario files, the run driver and its output files.

mod config;
mod output;
mod run;

pub use config::{
    emit_config, parse_config, Backend, Mode, PhaseRange, PhaseSpec, ReconstructionConfig, ScenarioConfig, ThetaSpec,
    DEFAULT_OUTPUT_DIR,
};
pub use output::{
    marginals_csv, records_csv, sha256_hex, verify_manifest, wigner_csv, write_atomic, DerivedParameters, RunManifest,
    MANIFEST_FILE, MARGINALS_FILE, RECORDS_FILE, WIGNER_FILE,
};
pub use run::{load_config, run, run_file, Overrides, RunOutcome};
