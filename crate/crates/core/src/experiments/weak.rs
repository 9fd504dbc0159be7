use std::collections::BTreeSet;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::qnd::{self, CouplingConfig};
use crate::states::{make_state, make_state_at, StatePreset};
use crate::transforms::rotate_to;

use super::sampling::{estimate_density, sample_indices, stream_rng, DensityEstimator};
use super::MeasurementRecord;

/// Meter spread must exceed the spread the signal imprints on it by this.
pub const MIN_WIDTH_RATIO: f64 = 10.0;
/// In exact mode, outcomes below this fraction of the peak density are skipped.
const EXACT_OUTCOME_FLOOR: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct WeakConfig {
    pub signal: StatePreset,
    pub meter: StatePreset,
    pub coupling: CouplingConfig,
    pub signal_grid: GridSpec,
    pub meter_grid: GridSpec,
    /// Zero selects the exact meter density.
    pub shots: usize,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct WeakReport {
    pub records: Vec<MeasurementRecord>,
    /// Histogram of the outcomes, or the exact density when `shots == 0`.
    pub meter_density: Vec<f64>,
    pub initial_meter_mean: f64,
    /// Mean outcome minus `initial_meter_mean`.
    pub shift_estimate: f64,
    pub standard_error: f64,
    /// `kappa sin(theta - phi) <X_s(phi + pi/2)>`.
    pub expected_shift: f64,
    pub width_ratio: f64,
    /// `(outcome, |<psi_s|psi_s^c>|^2)` for every distinct outcome.
    pub fidelities: Vec<(f64, f64)>,
}

impl WeakReport {
    pub fn min_fidelity(&self) -> f64 {
        self.fidelities.iter().map(|f| f.1).fold(f64::INFINITY, f64::min)
    }

    /// `|shift_estimate - expected_shift|` in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.shift_estimate - self.expected_shift).abs() / self.standard_error
    }
}

pub fn run_weak(cfg: &WeakConfig) -> Result<WeakReport> {
    let coupling = &cfg.coupling;
    let signal = make_state(&cfg.signal, &cfg.signal_grid)?;
    let meter = make_state_at(&cfg.meter, &cfg.meter_grid, coupling.theta())?;
    let prior = rotate_to(&signal, coupling.signal_angle())?;

    let imprint = coupling.shift_per_unit().abs() * prior.variance().sqrt();
    let width_ratio = meter.variance().sqrt() / imprint;
    if width_ratio < MIN_WIDTH_RATIO {
        return Err(Error::Precondition(format!(
            "weak regime needs meter width >= {MIN_WIDTH_RATIO} x signal imprint, got ratio {width_ratio:.3}"
        )));
    }

    let joint = qnd::entangle(&signal, &meter, coupling)?;
    let w = qnd::meter_marginal(&joint);
    let grid = cfg.meter_grid;
    let dx = grid.dx();
    let initial_meter_mean = meter.mean();

    let (records, meter_density, indices, mean, standard_error) = if cfg.shots == 0 {
        let mass: f64 = w.iter().sum::<f64>() * dx;
        let mean = w.iter().enumerate().map(|(k, d)| d * grid.point(k)).sum::<f64>() * dx / mass;
        let peak = w.iter().cloned().fold(0.0, f64::max);
        let idx: Vec<usize> = (0..w.len()).filter(|&k| w[k] > EXACT_OUTCOME_FLOOR * peak).collect();
        (Vec::new(), w.clone(), idx, mean, 0.0)
    } else {
        let mut rng = stream_rng(cfg.seed, 0);
        let idx = sample_indices(&w, cfg.shots, &mut rng)?;
        let records: Vec<MeasurementRecord> = idx
            .iter()
            .enumerate()
            .map(|(i, &k)| MeasurementRecord {
                phi: coupling.phi(),
                theta: coupling.theta(),
                outcome: grid.point(k),
                shot_index: i as u64,
            })
            .collect();
        let n = records.len() as f64;
        let mean = records.iter().map(|r| r.outcome).sum::<f64>() / n;
        let var = records.iter().map(|r| (r.outcome - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
        let density = estimate_density(&idx, &grid, DensityEstimator::Histogram)?;
        let distinct: Vec<usize> = idx.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        (records, density, distinct, mean, (var / n).sqrt())
    };

    let fidelities = indices
        .par_iter()
        .map(|&k| {
            let c = qnd::condition(&joint, k)?;
            Ok((c.outcome, c.state.fidelity(&prior)))
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(WeakReport {
        records,
        meter_density,
        initial_meter_mean,
        shift_estimate: mean - initial_meter_mean,
        standard_error,
        expected_shift: coupling.shift_per_unit() * prior.mean(),
        width_ratio,
        fidelities,
    })
}
