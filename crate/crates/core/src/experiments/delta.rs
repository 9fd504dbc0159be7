use std::f64::consts::{FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::qnd::{self, CouplingConfig};
use crate::states::QuadratureWaveFunction;

use super::sampling::{estimate_density, DensityEstimator};
use super::MeasurementRecord;

/// Densities whose mass is already this close to one are passed through.
const MASS_TOLERANCE: f64 = 1e-12;

pub fn is_orthogonal_readout(phi: f64, theta: f64) -> bool {
    let d = (theta - phi - FRAC_PI_2).rem_euclid(2.0 * PI);
    d.min(2.0 * PI - d) < 1e-9
}

fn interpolate(values: &[f64], grid: &GridSpec, x: f64) -> f64 {
    let f = (x - grid.x_min()) / grid.dx();
    let n = values.len();
    if !(f > -1.0) || f >= n as f64 {
        return 0.0;
    }
    let k = f.floor();
    let t = f - k;
    let at = |i: i64| if i < 0 || i >= n as i64 { 0.0 } else { values[i as usize] };
    (1.0 - t) * at(k as i64) + t * at(k as i64 + 1)
}

/// `kappa W(kappa x)` on `signal_grid`, normalized.
pub fn rescale_meter_density(
    meter_density: &[f64],
    meter_grid: &GridSpec,
    kappa: f64,
    signal_grid: &GridSpec,
) -> Result<Vec<f64>> {
    if !(kappa > 0.0) || !kappa.is_finite() {
        return Err(Error::InvalidCoupling(format!("kappa must be positive, got {kappa}")));
    }
    let mut out: Vec<f64> = if kappa == 1.0 && meter_grid == signal_grid {
        meter_density.to_vec()
    } else {
        signal_grid
            .points()
            .iter()
            .map(|&x| kappa * interpolate(meter_density, meter_grid, kappa * x))
            .collect()
    };
    let mass: f64 = out.iter().sum::<f64>() * signal_grid.dx();
    if !(mass > 0.0) {
        return Err(Error::ZeroNorm);
    }
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        out.iter_mut().for_each(|v| *v /= mass);
    }
    Ok(out)
}

/// Signal marginal inferred from the exact meter density at one phase.
/// The coupling must read the meter out at `theta = phi + pi/2`.
pub fn exact_delta_marginal(
    signal: &QuadratureWaveFunction,
    meter: &QuadratureWaveFunction,
    cfg: &CouplingConfig,
) -> Result<Vec<f64>> {
    if !is_orthogonal_readout(cfg.phi(), cfg.theta()) {
        return Err(Error::Precondition(format!(
            "delta-limit inference needs theta = phi + pi/2, got phi = {}, theta = {}",
            cfg.phi(),
            cfg.theta()
        )));
    }
    let joint = qnd::entangle(signal, meter, cfg)?;
    let w = qnd::meter_marginal(&joint);
    rescale_meter_density(&w, meter.grid(), cfg.kappa(), signal.grid())
}

/// Signal marginal estimated from sampled meter outcomes at one phase.
pub fn delta_limit_reconstruct(
    records: &[MeasurementRecord],
    meter_grid: &GridSpec,
    kappa: f64,
    estimator: DensityEstimator,
    signal_grid: &GridSpec,
) -> Result<Vec<f64>> {
    let first = records
        .first()
        .ok_or_else(|| Error::Precondition("empty record set".into()))?;
    let mut indices = Vec::with_capacity(records.len());
    for r in records {
        if r.phi != first.phi || r.theta != first.theta {
            return Err(Error::Precondition("records mix interaction phases".into()));
        }
        if !is_orthogonal_readout(r.phi, r.theta) {
            return Err(Error::Precondition(format!(
                "record at phi = {}, theta = {} is not an orthogonal readout",
                r.phi, r.theta
            )));
        }
        let k = meter_grid.exact_index(r.outcome, 1e-6).ok_or_else(|| {
            Error::Precondition(format!("outcome {} is not a meter grid point", r.outcome))
        })?;
        indices.push(k);
    }
    let est = estimate_density(&indices, meter_grid, estimator)?;
    rescale_meter_density(&est, meter_grid, kappa, signal_grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::l1_distance;
    use crate::states::{make_state, make_state_at, StatePreset};
    use crate::transforms::rotate_to;
    use num_complex::Complex64;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    fn delta_error(signal: StatePreset, r: f64) -> f64 {
        let cfg = CouplingConfig::orthogonal(1.0, -FRAC_PI_2).unwrap();
        let s = make_state(&signal, &grid()).unwrap();
        let m = make_state_at(&StatePreset::squeezed(r), &grid(), cfg.theta()).unwrap();
        let est = exact_delta_marginal(&s, &m, &cfg).unwrap();
        let truth = rotate_to(&s, cfg.signal_angle()).unwrap().density();
        l1_distance(&est, &truth, grid().dx())
    }

    #[test]
    fn squeezed_meter_recovers_signal_density() {
        for p in [StatePreset::Vacuum, StatePreset::coherent(Complex64::new(2.0, 0.0)), StatePreset::fock(1)] {
            let e3 = delta_error(p.clone(), 3.0);
            assert!(e3 < 0.02, "{p:?}: {e3}");
            assert!(delta_error(p.clone(), 1.0) > e3);
        }
    }

    #[test]
    fn fock_one_keeps_its_node() {
        let cfg = CouplingConfig::orthogonal(1.0, -FRAC_PI_2).unwrap();
        let s = make_state(&StatePreset::fock(1), &grid()).unwrap();
        let m = make_state_at(&StatePreset::squeezed(3.0), &grid(), cfg.theta()).unwrap();
        let est = exact_delta_marginal(&s, &m, &cfg).unwrap();
        let peak = est.iter().cloned().fold(0.0, f64::max);
        assert!(est[512] < 0.05 * peak);
    }

    #[test]
    fn rescaling_undoes_coupling_strength() {
        let kappa = 0.5;
        let cfg = CouplingConfig::orthogonal(kappa, -FRAC_PI_2).unwrap();
        let s = make_state(&StatePreset::coherent(Complex64::new(1.0, 0.0)), &grid()).unwrap();
        let m = make_state_at(&StatePreset::squeezed(3.0), &grid(), cfg.theta()).unwrap();
        let est = exact_delta_marginal(&s, &m, &cfg).unwrap();
        let truth = s.density();
        // blur in signal units has variance e^{-6} / (2 kappa^2)
        assert!(l1_distance(&est, &truth, grid().dx()) < 0.02);
    }

    #[test]
    fn exact_mode_with_unit_coupling_is_a_copy() {
        let cfg = CouplingConfig::orthogonal(1.0, 0.4).unwrap();
        let s = make_state(&StatePreset::coherent(Complex64::new(1.0, 0.5)), &grid()).unwrap();
        let m = make_state_at(&StatePreset::squeezed(3.0), &grid(), cfg.theta()).unwrap();
        let est = exact_delta_marginal(&s, &m, &cfg).unwrap();
        let raw = qnd::meter_marginal(&qnd::entangle(&s, &m, &cfg).unwrap());
        assert_eq!(est, raw);
    }

    #[test]
    fn record_validation() {
        let g = grid();
        assert!(delta_limit_reconstruct(&[], &g, 1.0, DensityEstimator::Histogram, &g).is_err());
        let rec = |phi: f64, theta: f64, outcome: f64| MeasurementRecord { phi, theta, outcome, shot_index: 0 };
        let inphase = [rec(0.3, 0.3, g.point(500))];
        assert!(delta_limit_reconstruct(&inphase, &g, 1.0, DensityEstimator::Histogram, &g).is_err());
        let ok = [rec(0.3, 0.3 + FRAC_PI_2, g.point(500)), rec(0.3, 0.3 + FRAC_PI_2, g.point(501))];
        let d = delta_limit_reconstruct(&ok, &g, 1.0, DensityEstimator::Histogram, &g).unwrap();
        assert!((d.iter().sum::<f64>() * g.dx() - 1.0).abs() < 1e-12);
        let off = [rec(0.3, 0.3 + FRAC_PI_2, g.point(500) + 0.3 * g.dx())];
        assert!(delta_limit_reconstruct(&off, &g, 1.0, DensityEstimator::Histogram, &g).is_err());
    }
}
