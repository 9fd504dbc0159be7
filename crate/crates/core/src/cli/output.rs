use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::experiments::MeasurementRecord;
use crate::grid::GridSpec;
use crate::wigner::WignerGrid;

use super::config::ScenarioConfig;

pub const RECORDS_FILE: &str = "records.csv";
pub const MARGINALS_FILE: &str = "marginals.csv";
pub const WIGNER_FILE: &str = "wigner.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// 17 significant digits, enough to round-trip any `f64`.
fn num(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn records_csv(records: &[MeasurementRecord]) -> String {
    let mut s = String::from("phase,theta,outcome,shot\n");
    for r in records {
        let _ = writeln!(s, "{},{},{},{}", num(r.phi), num(r.theta), num(r.outcome), r.shot_index);
    }
    s
}

/// One block of rows per phase.
pub fn marginals_csv(blocks: &[(f64, GridSpec, &[f64])]) -> String {
    let mut s = String::from("phase,x,density\n");
    for (phi, grid, density) in blocks {
        for (k, d) in density.iter().enumerate() {
            let _ = writeln!(s, "{},{},{}", num(*phi), num(grid.point(k)), num(*d));
        }
    }
    s
}

pub fn wigner_csv(w: &WignerGrid) -> String {
    let mut s = String::from("x,p,w\n");
    for ((i, j), v) in w.values.indexed_iter() {
        let _ = writeln!(s, "{},{},{}", num(w.x_grid.point(i)), num(w.p_grid.point(j)), num(*v));
    }
    s
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    let dest = dir.join(name);
    let io = |p: &Path| {
        let p = p.display().to_string();
        move |e| Error::io(p, e)
    };
    let mut f = fs::File::create(&tmp).map_err(io(&tmp))?;
    f.write_all(bytes).map_err(io(&tmp))?;
    f.sync_all().map_err(io(&tmp))?;
    drop(f);
    fs::rename(&tmp, &dest).map_err(io(&dest))
}

/// Quantities derived from the configuration.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct DerivedParameters {
    pub signal_dx: f64,
    pub meter_dx: f64,
    /// Momentum spacing of Wigner output, when one is written.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wigner_dp: Option<f64>,
    pub fock_cutoff: usize,
    /// Ramp-filter cutoff in angular wavenumber, for reconstructions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub reconstruction_cutoff: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub config: ScenarioConfig,
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
    pub derived: DerivedParameters,
    /// File name to SHA-256 of its contents.
    pub outputs: BTreeMap<String, String>,
    pub results: serde_json::Value,
}

/// Collects output files, then writes them and the manifest.
#[derive(Debug, Default)]
pub(crate) struct OutputSet {
    files: Vec<(String, String)>,
}

impl OutputSet {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    pub fn write(self, dir: &Path) -> Result<BTreeMap<String, String>> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir.display().to_string(), e))?;
        let mut sums = BTreeMap::new();
        for (name, contents) in self.files {
            write_atomic(dir, &name, contents.as_bytes())?;
            sums.insert(name, sha256_hex(contents.as_bytes()));
        }
        Ok(sums)
    }
}

pub(crate) fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(dir, MANIFEST_FILE, text.as_bytes())
}

/// Recomputes the checksum of every file listed in a manifest.
pub fn verify_manifest(dir: &Path) -> Result<bool> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let v: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Precondition(format!("manifest is not valid JSON: {e}")))?;
    let Some(outputs) = v.get("outputs").and_then(|o| o.as_object()) else {
        return Ok(false);
    };
    for (name, sum) in outputs {
        let p = dir.join(name);
        let bytes = fs::read(&p).map_err(|e| Error::io(p.display().to_string(), e))?;
        if Some(sha256_hex(&bytes).as_str()) != sum.as_str() {
            return Ok(false);
        }
    }
    Ok(true)
}
