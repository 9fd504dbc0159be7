//! Scenario files.
//!
//! A scenario is a TOML document:
//!
//! ```toml
//! mode = "tomography"          # single | weak | delta | tomography
//! kappa = 1.0
//! phi = 0.0                    # ignored by tomography, which sweeps it
//! theta = "orthogonal"         # or an angle in radians
//! shots = 0                    # per phase; 0 uses exact densities
//! seed = 1
//! backend = "grid"             # grid | fock (fock: single mode only)
//! output_dir = "out"
//! fock_cutoff = 64
//!
//! [signal]
//! kind = "cat"
//! alpha_re = 2.0
//! parity = 1
//!
//! [meter]                      # described in its readout frame
//! kind = "squeezed_vacuum"
//! r = 3.0
//!
//! [phases]                     # or phases = [0.0, 0.3, ...]
//! count = 32                   # start = 0, end = pi (exclusive) by default
//!
//! [signal_grid]                # likewise [meter_grid]
//! x_min = -10.0
//! x_max = 10.0
//! n_points = 1024
//!
//! [reconstruction]
//! cutoff_fraction = 0.5
//! half_width = 5.0
//! n_points = 256
//!
//! [estimator]
//! kind = "histogram"           # or kind = "kde", bandwidth = 0.05
//! ```

use std::f64::consts::{FRAC_PI_2, PI};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::experiments::{DensityEstimator, FbpOptions, DEFAULT_CUTOFF_FRACTION};
use crate::grid::GridSpec;
use crate::states::StatePreset;

pub const DEFAULT_OUTPUT_DIR: &str = "qndtomo-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Single,
    Weak,
    Delta,
    Tomography,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Grid,
    Fock,
}

/// Meter readout angle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaSpec {
    /// `phi + pi/2`, resolved per phase.
    Orthogonal,
    Angle(f64),
}

impl ThetaSpec {
    pub fn resolve(&self, phi: f64) -> f64 {
        match self {
            ThetaSpec::Orthogonal => phi + FRAC_PI_2,
            ThetaSpec::Angle(a) => *a,
        }
    }
}

impl Serialize for ThetaSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ThetaSpec::Orthogonal => s.serialize_str("orthogonal"),
            ThetaSpec::Angle(a) => s.serialize_f64(*a),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhaseSpec {
    List(Vec<f64>),
    Range(PhaseRange),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseRange {
    pub count: usize,
    #[serde(default)]
    pub start: f64,
    #[serde(default = "default_phase_end")]
    pub end: f64,
}

fn default_phase_end() -> f64 {
    PI
}

impl PhaseSpec {
    /// Explicit phases; a range excludes its end point.
    pub fn resolve(&self) -> Vec<f64> {
        match self {
            PhaseSpec::List(v) => v.clone(),
            PhaseSpec::Range(r) => (0..r.count)
                .map(|k| r.start + k as f64 * (r.end - r.start) / r.count as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GridTable {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionConfig {
    #[serde(default = "default_cutoff")]
    pub cutoff_fraction: f64,
    /// Output window `[-half_width, half_width)`; defaults to half the signal grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_points: Option<usize>,
}

fn default_cutoff() -> f64 {
    DEFAULT_CUTOFF_FRACTION
}

impl Default for ReconstructionConfig {
    fn default() -> Self {
        Self {
            cutoff_fraction: DEFAULT_CUTOFF_FRACTION,
            half_width: None,
            n_points: None,
        }
    }
}

impl ReconstructionConfig {
    pub fn options(&self, signal_grid: &GridSpec) -> Result<FbpOptions> {
        let mut opts = FbpOptions::for_grid(signal_grid);
        opts.cutoff_fraction = self.cutoff_fraction;
        if self.half_width.is_some() || self.n_points.is_some() {
            let half = self.half_width.unwrap_or(opts.x_grid.x_max());
            let n = self.n_points.unwrap_or(opts.x_grid.len());
            let g = GridSpec::symmetric(half, n)?;
            opts.x_grid = g;
            opts.p_grid = g;
        }
        Ok(opts)
    }
}

/// A fully validated scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    pub mode: Mode,
    pub signal: StatePreset,
    pub meter: StatePreset,
    pub kappa: f64,
    pub phi: f64,
    pub theta: ThetaSpec,
    pub shots: u64,
    pub seed: u64,
    pub backend: Backend,
    pub output_dir: String,
    pub fock_cutoff: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<PhaseSpec>,
    #[serde(serialize_with = "ser_grid")]
    pub signal_grid: GridSpec,
    #[serde(serialize_with = "ser_grid")]
    pub meter_grid: GridSpec,
    pub reconstruction: ReconstructionConfig,
    pub estimator: DensityEstimator,
}

fn ser_grid<S: Serializer>(g: &GridSpec, s: S) -> std::result::Result<S::Ok, S::Error> {
    GridTable {
        x_min: g.x_min(),
        x_max: g.x_max(),
        n_points: g.len(),
    }
    .serialize(s)
}

fn take<T: DeserializeOwned>(table: &mut toml::Table, key: &str, errs: &mut Vec<String>) -> Option<T> {
    let v = table.remove(key)?;
    match v.try_into::<T>() {
        Ok(t) => Some(t),
        Err(e) => {
            errs.push(format!("{key}: {}", e.to_string().trim()));
            None
        }
    }
}

fn require<T>(v: Option<T>, key: &str, present: bool, errs: &mut Vec<String>) -> Option<T> {
    if v.is_none() && !present {
        errs.push(format!("{key}: missing required field"));
    }
    v
}

fn take_grid(table: &mut toml::Table, key: &str, errs: &mut Vec<String>) -> Option<GridSpec> {
    let g: GridTable = match take(table, key, errs) {
        Some(g) => g,
        None if table.contains_key(key) => return None,
        None => return Some(GridSpec::default()),
    };
    match GridSpec::new(g.x_min, g.x_max, g.n_points) {
        Ok(g) if g.is_symmetric() => Some(g),
        Ok(_) => {
            errs.push(format!("{key}: grid must be symmetric about zero"));
            None
        }
        Err(e) => {
            errs.push(format!("{key}: {e}"));
            None
        }
    }
}

fn check_finite(v: f64, key: &str, errs: &mut Vec<String>) {
    if !v.is_finite() {
        errs.push(format!("{key} must be finite"));
    }
}

/// Parses and validates a scenario, reporting every problem found.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(vec![e.to_string().trim().to_string()]))?;
    let mut errs = Vec::new();

    let has = |t: &toml::Table, k: &str| t.contains_key(k);
    let (p_mode, p_signal, p_meter, p_kappa) =
        (has(&table, "mode"), has(&table, "signal"), has(&table, "meter"), has(&table, "kappa"));
    let mode: Option<Mode> = take(&mut table, "mode", &mut errs);
    let mode = require(mode, "mode", p_mode, &mut errs);
    let signal: Option<StatePreset> = take(&mut table, "signal", &mut errs);
    let signal = require(signal, "signal", p_signal, &mut errs);
    let meter: Option<StatePreset> = take(&mut table, "meter", &mut errs);
    let meter = require(meter, "meter", p_meter, &mut errs);
    let kappa: Option<f64> = take(&mut table, "kappa", &mut errs);
    let kappa = require(kappa, "kappa", p_kappa, &mut errs);

    let phi: f64 = take(&mut table, "phi", &mut errs).unwrap_or(0.0);
    let theta = match table.remove("theta") {
        None => Some(ThetaSpec::Orthogonal),
        Some(toml::Value::String(s)) if s == "orthogonal" => Some(ThetaSpec::Orthogonal),
        Some(toml::Value::Float(f)) => Some(ThetaSpec::Angle(f)),
        Some(toml::Value::Integer(i)) => Some(ThetaSpec::Angle(i as f64)),
        Some(other) => {
            errs.push(format!("theta: expected an angle or \"orthogonal\", got {other}"));
            None
        }
    };
    let shots: Option<i64> = take(&mut table, "shots", &mut errs);
    let seed: Option<i64> = take(&mut table, "seed", &mut errs);
    let backend: Backend = take(&mut table, "backend", &mut errs).unwrap_or_default();
    let output_dir: String = take(&mut table, "output_dir", &mut errs).unwrap_or_else(|| DEFAULT_OUTPUT_DIR.into());
    let fock_cutoff: i64 = take(&mut table, "fock_cutoff", &mut errs).unwrap_or(crate::oracle::DEFAULT_CUTOFF as i64);
    let phases: Option<PhaseSpec> = take(&mut table, "phases", &mut errs);
    let signal_grid = take_grid(&mut table, "signal_grid", &mut errs);
    let meter_grid = take_grid(&mut table, "meter_grid", &mut errs);
    let reconstruction: ReconstructionConfig = take(&mut table, "reconstruction", &mut errs).unwrap_or_default();
    let estimator: DensityEstimator = take(&mut table, "estimator", &mut errs).unwrap_or_default();

    for key in table.keys() {
        errs.push(format!("{key}: unknown key"));
    }

    if let Some(k) = kappa {
        if !(k > 0.0) || !k.is_finite() {
            errs.push(format!("kappa must be positive, got {k}"));
        }
    }
    check_finite(phi, "phi", &mut errs);
    if let Some(ThetaSpec::Angle(a)) = theta {
        check_finite(a, "theta", &mut errs);
    }
    if let Some(s) = shots {
        if s < 0 {
            errs.push(format!("shots must be non-negative, got {s}"));
        }
    }
    if let Some(s) = seed {
        if s < 0 {
            errs.push(format!("seed must be non-negative, got {s}"));
        }
    }
    if !(1..=512).contains(&fock_cutoff) {
        errs.push(format!("fock_cutoff must lie in 1..=512, got {fock_cutoff}"));
    }
    for (key, preset) in [("signal", &signal), ("meter", &meter)] {
        if let Some(p) = preset {
            errs.extend(p.violations().into_iter().map(|v| format!("{key}.{v}")));
        }
    }
    let rc = reconstruction;
    if !(rc.cutoff_fraction > 0.0 && rc.cutoff_fraction <= 1.0) {
        errs.push(format!("reconstruction.cutoff_fraction must lie in (0, 1], got {}", rc.cutoff_fraction));
    }
    if let DensityEstimator::Kde { bandwidth } = estimator {
        if !(bandwidth > 0.0) || !bandwidth.is_finite() {
            errs.push(format!("estimator.bandwidth must be positive, got {bandwidth}"));
        }
    }
    if let Some(g) = signal_grid {
        match rc.options(&g) {
            Ok(o) => {
                let aligned = g.exact_index(o.x_grid.x_min(), 1e-6).is_some()
                    && ((o.x_grid.dx() / g.dx()) - (o.x_grid.dx() / g.dx()).round()).abs() < 1e-9;
                if !aligned {
                    errs.push("reconstruction: window nodes must coincide with signal_grid nodes".into());
                }
            }
            Err(e) => errs.push(format!("reconstruction: {e}")),
        }
    }
    if let Some(spec) = &phases {
        let list = spec.resolve();
        if let PhaseSpec::Range(r) = spec {
            if r.count == 0 {
                errs.push("phases.count must be positive".into());
            }
        }
        if list.iter().any(|p| !(0.0..PI).contains(p)) {
            errs.push("phases must lie in [0, pi)".into());
        }
        if list.windows(2).any(|w| w[1] <= w[0]) {
            errs.push("phases must be strictly increasing without duplicates".into());
        }
    }
    match mode {
        Some(Mode::Tomography) => {
            if phases.is_none() {
                errs.push("phases: required in tomography mode".into());
            }
            if matches!(theta, Some(ThetaSpec::Angle(_))) {
                errs.push("theta: tomography reads out at phi + pi/2; use \"orthogonal\"".into());
            }
        }
        Some(Mode::Delta) => {
            if let Some(ThetaSpec::Angle(a)) = theta {
                if !crate::experiments::is_orthogonal_readout(phi, a) {
                    errs.push("theta: delta mode needs theta = phi + pi/2".into());
                }
            }
        }
        _ => {}
    }
    if backend == Backend::Fock && matches!(mode, Some(m) if m != Mode::Single) {
        errs.push("backend: the fock backend supports single mode only".into());
    }

    if !errs.is_empty() {
        return Err(Error::Config(errs));
    }
    Ok(ScenarioConfig {
        mode: mode.expect("checked"),
        signal: signal.expect("checked"),
        meter: meter.expect("checked"),
        kappa: kappa.expect("checked"),
        phi,
        theta: theta.expect("checked"),
        shots: shots.unwrap_or(0) as u64,
        seed: seed.unwrap_or(0) as u64,
        backend,
        output_dir,
        fock_cutoff: fock_cutoff as usize,
        phases,
        signal_grid: signal_grid.expect("checked"),
        meter_grid: meter_grid.expect("checked"),
        reconstruction: rc,
        estimator,
    })
}

/// TOML text that [`parse_config`] maps back to `config`.
pub fn emit_config(config: &ScenarioConfig) -> String {
    toml::to_string(config).expect("scenario serializes")
}
