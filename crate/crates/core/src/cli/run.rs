use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde_json::json;

use crate::error::{Error, Result};
use crate::experiments::{
    delta_limit_reconstruct, exact_delta_marginal, l1_distance, reconstruct_wigner, run_weak,
    sample_indices, sweep_phases, MeasurementRecord, SweepConfig, WeakConfig,
};
use crate::experiments::{stream_rng, FbpOptions};
use crate::grid::GridSpec;
use crate::oracle;
use crate::qnd::{self, CouplingConfig};
use crate::states::{make_state, make_state_at, QuadratureWaveFunction};
use crate::transforms::rotate_to;
use crate::wigner::{wigner_on, WignerGrid};

use super::config::{emit_config, parse_config, Backend, Mode, ScenarioConfig};
use super::output::{
    marginals_csv, records_csv, wigner_csv, write_manifest, DerivedParameters, OutputSet, RunManifest,
    MARGINALS_FILE, RECORDS_FILE, WIGNER_FILE,
};

/// Command-line values that take precedence over the scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<String>,
    pub seed: Option<u64>,
    pub shots: Option<u64>,
    pub backend: Option<Backend>,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub output_dir: PathBuf,
    pub manifest: RunManifest,
}

/// Reads and validates a scenario file, then applies `overrides`.
pub fn load_config(path: &Path, overrides: &Overrides) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let wrap = |e: Error| Error::InConfig {
        path: path.display().to_string(),
        source: Box::new(e),
    };
    let mut cfg = parse_config(&text).map_err(wrap)?;
    let touched = overrides.output_dir.is_some()
        || overrides.seed.is_some()
        || overrides.shots.is_some()
        || overrides.backend.is_some();
    if !touched {
        return Ok(cfg);
    }
    if let Some(d) = &overrides.output_dir {
        cfg.output_dir = d.clone();
    }
    if let Some(s) = overrides.seed {
        cfg.seed = s;
    }
    if let Some(s) = overrides.shots {
        cfg.shots = s;
    }
    if let Some(b) = overrides.backend {
        cfg.backend = b;
    }
    // the overridden scenario must pass the same checks
    parse_config(&emit_config(&cfg)).map_err(wrap)
}

/// [`load_config`] then [`run`]. Failures other than I/O name the scenario file.
pub fn run_file(path: &Path, overrides: &Overrides) -> Result<RunOutcome> {
    let cfg = load_config(path, overrides)?;
    run(&cfg).map_err(|e| match e {
        Error::Io { .. } => e,
        e => Error::InConfig {
            path: path.display().to_string(),
            source: Box::new(e),
        },
    })
}

fn unix_ms() -> u128 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or_default()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn records_for(indices: &[usize], grid: &GridSpec, phi: f64, theta: f64) -> Vec<MeasurementRecord> {
    indices
        .iter()
        .enumerate()
        .map(|(i, &k)| MeasurementRecord {
            phi,
            theta,
            outcome: grid.point(k),
            shot_index: i as u64,
        })
        .collect()
}

struct ModeOutput {
    files: OutputSet,
    results: serde_json::Value,
    wigner_dp: Option<f64>,
    reconstruction_cutoff: Option<f64>,
    phases: Option<Vec<f64>>,
}

/// Runs a validated scenario and writes its output directory.
pub fn run(config: &ScenarioConfig) -> Result<RunOutcome> {
    let started = unix_ms();
    let out = match config.mode {
        Mode::Single => run_single(config)?,
        Mode::Weak => run_weak_mode(config)?,
        Mode::Delta => run_delta(config)?,
        Mode::Tomography => run_tomography(config)?,
    };
    let dir = PathBuf::from(&config.output_dir);
    let outputs = out.files.write(&dir)?;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        started_unix_ms: started,
        finished_unix_ms: unix_ms(),
        derived: DerivedParameters {
            signal_dx: config.signal_grid.dx(),
            meter_dx: config.meter_grid.dx(),
            wigner_dp: out.wigner_dp,
            fock_cutoff: config.fock_cutoff,
            reconstruction_cutoff: out.reconstruction_cutoff,
            phases: out.phases,
        },
        outputs,
        results: out.results,
    };
    write_manifest(&dir, &manifest)?;
    Ok(RunOutcome { output_dir: dir, manifest })
}

/// Outcome indices for one meter density: sampled, or the most likely one.
fn draw(config: &ScenarioConfig, density: &[f64]) -> Result<Vec<usize>> {
    if config.shots == 0 {
        return Ok(vec![argmax(density)]);
    }
    let mut rng = stream_rng(config.seed, 0);
    sample_indices(density, config.shots as usize, &mut rng)
}

fn window(config: &ScenarioConfig) -> Result<FbpOptions> {
    config.reconstruction.options(&config.signal_grid)
}

fn run_single(config: &ScenarioConfig) -> Result<ModeOutput> {
    let theta = config.theta.resolve(config.phi);
    let coupling = CouplingConfig::new(config.kappa, config.phi, theta)?;
    let sg = config.signal_grid;
    let mg = config.meter_grid;
    let prior = make_state(&config.signal, &sg)?;

    let (meter_density, posterior, norm_drift) = match config.backend {
        Backend::Grid => {
            let meter = make_state_at(&config.meter, &mg, theta)?;
            let joint = qnd::entangle(&prior, &meter, &coupling)?;
            let w = qnd::meter_marginal(&joint);
            let idx = draw(config, &w)?;
            let c = qnd::condition(&joint, idx[0])?;
            (w, (idx, c.state, c.probability_density), (joint.norm() - 1.0).abs())
        }
        Backend::Fock => {
            let fs = oracle::fock_state(&config.signal, config.fock_cutoff)?;
            let fm = oracle::fock_state_at(&config.meter, config.fock_cutoff, theta)?;
            let joint = oracle::fock_evolve(&fs, &fm, config.kappa, config.phi, theta)?;
            let psi = joint.grid_amplitudes(&sg, &mg);
            let mut w: Vec<f64> = (0..psi.ncols())
                .map(|j| psi.column(j).iter().map(|a| a.norm_sqr()).sum::<f64>() * sg.dx())
                .collect();
            let mass = w.iter().sum::<f64>() * mg.dx();
            w.iter_mut().for_each(|v| *v /= mass);
            let idx = draw(config, &w)?;
            let col: Vec<Complex64> = psi.column(idx[0]).iter().copied().collect();
            let state = QuadratureWaveFunction::unnormalized(sg, coupling.signal_angle(), col)?.renormalize()?;
            let p = w[idx[0]];
            (w, (idx, state, p), (joint.norm() - 1.0).abs())
        }
    };
    let (indices, state, probability_density) = posterior;
    if !(probability_density > 0.0) {
        return Err(Error::ZeroProbabilityOutcome { outcome: mg.point(indices[0]), density: probability_density });
    }
    let state = rotate_to(&state, 0.0)?;
    let opts = window(config)?;
    let wigner = wigner_on(&state, &opts.x_grid, &opts.p_grid)?;

    let records = if config.shots == 0 {
        Vec::new()
    } else {
        records_for(&indices, &mg, config.phi, theta)
    };
    let mut files = OutputSet::default();
    files.add(RECORDS_FILE, records_csv(&records));
    files.add(MARGINALS_FILE, marginals_csv(&[(config.phi, mg, &meter_density)]));
    files.add(WIGNER_FILE, wigner_csv(&wigner));
    let results = json!({
        "outcome": mg.point(indices[0]),
        "outcome_index": indices[0],
        "probability_density": probability_density,
        "joint_norm_drift": norm_drift,
        "prior_fidelity": state.fidelity(&prior),
        "posterior_mean": state.mean(),
        "posterior_variance": state.variance(),
        "prior_variance": prior.variance(),
        "wigner": wigner_summary(&wigner),
    });
    Ok(ModeOutput {
        files,
        results,
        wigner_dp: Some(opts.p_grid.dx()),
        reconstruction_cutoff: None,
        phases: None,
    })
}

fn run_weak_mode(config: &ScenarioConfig) -> Result<ModeOutput> {
    let theta = config.theta.resolve(config.phi);
    let report = run_weak(&WeakConfig {
        signal: config.signal.clone(),
        meter: config.meter.clone(),
        coupling: CouplingConfig::new(config.kappa, config.phi, theta)?,
        signal_grid: config.signal_grid,
        meter_grid: config.meter_grid,
        shots: config.shots as usize,
        seed: config.seed,
    })?;
    let mut files = OutputSet::default();
    files.add(RECORDS_FILE, records_csv(&report.records));
    files.add(
        MARGINALS_FILE,
        marginals_csv(&[(config.phi, config.meter_grid, &report.meter_density)]),
    );
    let results = json!({
        "initial_meter_mean": report.initial_meter_mean,
        "shift_estimate": report.shift_estimate,
        "standard_error": report.standard_error,
        "expected_shift": report.expected_shift,
        "z_score": report.z_score(),
        "width_ratio": report.width_ratio,
        "min_fidelity": report.min_fidelity(),
        "outcomes_checked": report.fidelities.len(),
    });
    Ok(ModeOutput { files, results, wigner_dp: None, reconstruction_cutoff: None, phases: None })
}

fn run_delta(config: &ScenarioConfig) -> Result<ModeOutput> {
    let coupling = CouplingConfig::orthogonal(config.kappa, config.phi)?;
    let sg = config.signal_grid;
    let mg = config.meter_grid;
    let signal = make_state(&config.signal, &sg)?;
    let meter = make_state_at(&config.meter, &mg, coupling.theta())?;
    let (density, records) = if config.shots == 0 {
        (exact_delta_marginal(&signal, &meter, &coupling)?, Vec::new())
    } else {
        let w = qnd::meter_marginal(&qnd::entangle(&signal, &meter, &coupling)?);
        let idx = draw(config, &w)?;
        let records = records_for(&idx, &mg, coupling.phi(), coupling.theta());
        let d = delta_limit_reconstruct(&records, &mg, config.kappa, config.estimator, &sg)?;
        (d, records)
    };
    let truth = rotate_to(&signal, coupling.signal_angle())?.density();
    let mut files = OutputSet::default();
    files.add(RECORDS_FILE, records_csv(&records));
    files.add(MARGINALS_FILE, marginals_csv(&[(config.phi, sg, &density)]));
    let results = json!({
        "signal_angle": coupling.signal_angle(),
        "l1_to_exact_marginal": l1_distance(&density, &truth, sg.dx()),
        "shots": records.len(),
    });
    Ok(ModeOutput { files, results, wigner_dp: None, reconstruction_cutoff: None, phases: None })
}

fn run_tomography(config: &ScenarioConfig) -> Result<ModeOutput> {
    let phases = config
        .phases
        .as_ref()
        .map(|p| p.resolve())
        .ok_or_else(|| Error::Config(vec!["phases: required in tomography mode".into()]))?;
    let sg = config.signal_grid;
    let (set, records) = sweep_phases(&SweepConfig {
        signal: config.signal.clone(),
        meter: config.meter.clone(),
        kappa: config.kappa,
        phases: phases.clone(),
        shots: config.shots as usize,
        seed: config.seed,
        signal_grid: sg,
        meter_grid: config.meter_grid,
        estimator: config.estimator,
    })?;
    let opts = window(config)?;
    let rec = reconstruct_wigner(&set, &opts)?;
    let truth = wigner_on(&make_state(&config.signal, &sg)?, &opts.x_grid, &opts.p_grid)?;

    let blocks: Vec<(f64, GridSpec, &[f64])> =
        set.entries.iter().map(|e| (e.phi, sg, e.density.as_slice())).collect();
    let mut files = OutputSet::default();
    files.add(RECORDS_FILE, records_csv(&records));
    files.add(MARGINALS_FILE, marginals_csv(&blocks));
    files.add(WIGNER_FILE, wigner_csv(&rec.wigner));
    let residuals = rec.residuals.clone().unwrap_or_default();
    let results = json!({
        "shots_used": rec.shots_used,
        "max_abs_error": rec.wigner.max_abs_diff(&truth)?,
        "residuals": residuals,
        "max_residual": residuals.iter().cloned().fold(0.0, f64::max),
        "wigner": wigner_summary(&rec.wigner),
    });
    Ok(ModeOutput {
        files,
        results,
        wigner_dp: Some(opts.p_grid.dx()),
        reconstruction_cutoff: Some(opts.cutoff_fraction * std::f64::consts::PI / sg.dx()),
        phases: Some(phases),
    })
}

fn wigner_summary(w: &WignerGrid) -> serde_json::Value {
    let (x, p) = w.argmax();
    json!({
        "total": w.total(),
        "min": w.min(),
        "max": w.max(),
        "argmax": [x, p],
        "purity": w.purity(),
    })
}
