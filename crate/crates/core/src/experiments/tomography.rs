use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::qnd::{self, CouplingConfig};
use crate::states::{make_state, make_state_at, StatePreset};
use crate::transforms::{rotate_to, FftPair};
use crate::wigner::{wigner_marginal_on, WignerGrid};

use super::delta::rescale_meter_density;
use super::sampling::{estimate_density, sample_indices, stream_rng, DensityEstimator};
use super::{l1_distance, MarginalSet, MeasurementRecord, PhaseMarginal, ReconstructionResult};

pub const MIN_PHASES: usize = 8;
/// Fraction of the marginal grid's Nyquist frequency kept by the ramp filter.
pub const DEFAULT_CUTOFF_FRACTION: f64 = 0.5;
const MAX_GAP: f64 = FRAC_PI_4 + 1e-9;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub signal: StatePreset,
    /// Prepared in the readout frame of every phase.
    pub meter: StatePreset,
    pub kappa: f64,
    /// Strictly increasing, in `[0, pi)`.
    pub phases: Vec<f64>,
    /// Per phase; zero selects the exact meter density.
    pub shots: usize,
    pub seed: u64,
    pub signal_grid: GridSpec,
    pub meter_grid: GridSpec,
    pub estimator: DensityEstimator,
}

fn validate_phases(phases: &[f64]) -> Result<()> {
    if phases.is_empty() {
        return Err(Error::Precondition("phase list is empty".into()));
    }
    for (i, &p) in phases.iter().enumerate() {
        if !(0.0..PI).contains(&p) {
            return Err(Error::Precondition(format!("phase {p} lies outside [0, pi)")));
        }
        if i > 0 {
            let prev = phases[i - 1];
            if p == prev {
                return Err(Error::Precondition(format!("duplicate phase {p}")));
            }
            if p < prev {
                return Err(Error::Precondition(format!("phases must increase, {p} follows {prev}")));
            }
        }
    }
    Ok(())
}

/// Measures the meter at `theta = phi + pi/2` for every phase and converts
/// the outcomes into signal marginals. Each phase draws from its own RNG
/// stream, so the result does not depend on scheduling.
pub fn sweep_phases(cfg: &SweepConfig) -> Result<(MarginalSet, Vec<MeasurementRecord>)> {
    validate_phases(&cfg.phases)?;
    let signal = make_state(&cfg.signal, &cfg.signal_grid)?;
    let per_phase = cfg
        .phases
        .par_iter()
        .enumerate()
        .map(|(i, &phi)| {
            let coupling = CouplingConfig::orthogonal(cfg.kappa, phi)?;
            let meter = make_state_at(&cfg.meter, &cfg.meter_grid, coupling.theta())?;
            let joint = qnd::entangle(&signal, &meter, &coupling)?;
            let w = qnd::meter_marginal(&joint);
            let exact = Some(rotate_to(&signal, coupling.signal_angle())?.density());
            if cfg.shots == 0 {
                let density = rescale_meter_density(&w, &cfg.meter_grid, cfg.kappa, &cfg.signal_grid)?;
                let entry = PhaseMarginal { phi, density, shots: 0, estimator: cfg.estimator, exact };
                return Ok((entry, Vec::new()));
            }
            let mut rng = stream_rng(cfg.seed, i as u64);
            let idx = sample_indices(&w, cfg.shots, &mut rng)?;
            let records = idx
                .iter()
                .enumerate()
                .map(|(shot, &k)| MeasurementRecord {
                    phi,
                    theta: coupling.theta(),
                    outcome: cfg.meter_grid.point(k),
                    shot_index: shot as u64,
                })
                .collect();
            let est = estimate_density(&idx, &cfg.meter_grid, cfg.estimator)?;
            let density = rescale_meter_density(&est, &cfg.meter_grid, cfg.kappa, &cfg.signal_grid)?;
            let entry = PhaseMarginal { phi, density, shots: cfg.shots, estimator: cfg.estimator, exact };
            Ok((entry, records))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::with_capacity(per_phase.len());
    let mut records = Vec::new();
    for (e, r) in per_phase {
        entries.push(e);
        records.extend(r);
    }
    Ok((MarginalSet { grid: cfg.signal_grid, entries }, records))
}

/// At least [`MIN_PHASES`] phases, no gap (cyclic over `pi`) wider than `pi/4`.
pub fn check_coverage(phases: &[f64]) -> Result<()> {
    validate_phases(phases)?;
    if phases.len() < MIN_PHASES {
        return Err(Error::Precondition(format!(
            "reconstruction needs at least {MIN_PHASES} phases, got {}",
            phases.len()
        )));
    }
    let gaps = angular_gaps(phases);
    let widest = gaps.iter().cloned().fold(0.0, f64::max);
    if widest > MAX_GAP {
        return Err(Error::Precondition(format!(
            "phases leave a gap of {widest:.4} rad, more than pi/4"
        )));
    }
    Ok(())
}

/// `gaps[i]` is the distance from phase `i` to the next one, cyclic over `pi`.
fn angular_gaps(phases: &[f64]) -> Vec<f64> {
    let n = phases.len();
    (0..n)
        .map(|i| if i + 1 < n { phases[i + 1] - phases[i] } else { phases[0] + PI - phases[i] })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FbpOptions {
    pub cutoff_fraction: f64,
    pub x_grid: GridSpec,
    pub p_grid: GridSpec,
}

impl FbpOptions {
    /// Output window over the central half of `grid` with every second
    /// node, so output points coincide with state-grid nodes. Back-projection
    /// streaks from finite angular sampling grow with radius; the window
    /// keeps them out.
    pub fn for_grid(grid: &GridSpec) -> Self {
        let half = 0.25 * (grid.x_max() - grid.x_min());
        let centre = 0.5 * (grid.x_max() + grid.x_min());
        let out = GridSpec::new(centre - half, centre + half, (grid.len() / 4).max(crate::grid::MIN_POINTS))
            .expect("window of a valid grid is valid");
        FbpOptions {
            cutoff_fraction: DEFAULT_CUTOFF_FRACTION,
            x_grid: out,
            p_grid: out,
        }
    }
}

/// Ram-Lak filtered projection `Q(u) = tau sum_n h(n) M(u - n tau)` with the
/// spectrum cut at `cutoff_fraction` of Nyquist.
fn ramp_filter(densities: &[&[f64]], grid: &GridSpec, cutoff_fraction: f64) -> Vec<Vec<f64>> {
    let n = grid.len();
    let m = 2 * n;
    let tau = grid.dx();
    let fft = FftPair::new(m);
    let mut kernel = vec![Complex64::default(); m];
    kernel[0] = Complex64::new(1.0 / (4.0 * tau * tau), 0.0);
    for k in (1..n).step_by(2) {
        let v = -1.0 / (PI * PI * (k * k) as f64 * tau * tau);
        kernel[k] = Complex64::new(v, 0.0);
        kernel[m - k] = Complex64::new(v, 0.0);
    }
    fft.forward.process(&mut kernel);
    let limit = cutoff_fraction * PI / tau;
    for (h, k) in kernel.iter_mut().zip(GridSpec::fft_wavenumbers(m, tau)) {
        if k.abs() > limit {
            *h = Complex64::default();
        }
    }
    densities
        .par_iter()
        .map(|d| {
            let mut buf = vec![Complex64::default(); m];
            for (b, &v) in buf.iter_mut().zip(d.iter()) {
                *b = Complex64::new(v, 0.0);
            }
            fft.forward.process(&mut buf);
            for (b, h) in buf.iter_mut().zip(&kernel) {
                *b *= h;
            }
            fft.inverse.process(&mut buf);
            buf[..n].iter().map(|b| b.re * tau / m as f64).collect()
        })
        .collect()
}

fn lerp(values: &[f64], grid: &GridSpec, u: f64) -> f64 {
    let f = (u - grid.x_min()) / grid.dx();
    let n = values.len();
    if !(f >= 0.0) || f > (n - 1) as f64 {
        return 0.0;
    }
    let k = (f.floor() as usize).min(n - 2);
    let t = f - k as f64;
    (1.0 - t) * values[k] + t * values[k + 1]
}

/// Filtered back-projection of the marginals of `X(phi + pi/2)`.
pub fn reconstruct_wigner(set: &MarginalSet, opts: &FbpOptions) -> Result<ReconstructionResult> {
    let phases = set.phases();
    check_coverage(&phases)?;
    if !(opts.cutoff_fraction > 0.0 && opts.cutoff_fraction <= 1.0) {
        return Err(Error::Precondition(format!(
            "cutoff fraction must lie in (0, 1], got {}",
            opts.cutoff_fraction
        )));
    }
    let densities: Vec<&[f64]> = set.entries.iter().map(|e| e.density.as_slice()).collect();
    let filtered = ramp_filter(&densities, &set.grid, opts.cutoff_fraction);

    let gaps = angular_gaps(&phases);
    let k = phases.len();
    let weights: Vec<f64> = (0..k).map(|i| 0.5 * (gaps[i] + gaps[(i + k - 1) % k])).collect();
    let dirs: Vec<(f64, f64)> = phases.iter().map(|p| ((p + FRAC_PI_2).cos(), (p + FRAC_PI_2).sin())).collect();

    let xs = opts.x_grid.points();
    let ps = opts.p_grid.points();
    let rows: Vec<Vec<f64>> = xs
        .par_iter()
        .map(|&x| {
            ps.iter()
                .map(|&p| {
                    let mut acc = 0.0;
                    for ((q, &(c, s)), &w) in filtered.iter().zip(&dirs).zip(&weights) {
                        acc += w * lerp(q, &set.grid, c * x - s * p);
                    }
                    acc / (2.0 * PI)
                })
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((xs.len(), ps.len()));
    for (i, row) in rows.into_iter().enumerate() {
        values.row_mut(i).assign(&ndarray::Array1::from(row));
    }
    let mut wigner = WignerGrid::new(opts.x_grid, opts.p_grid, values)?;
    let total = wigner.total();
    if !(total.abs() > 1e-12) {
        return Err(Error::ZeroNorm);
    }
    wigner.values /= total;

    let residuals = if set.entries.iter().all(|e| e.exact.is_some()) {
        Some(
            set.entries
                .par_iter()
                .map(|e| slice_l1(&wigner, &set.grid, e.phi, e.exact.as_deref().unwrap_or_default()))
                .collect(),
        )
    } else {
        None
    };
    Ok(ReconstructionResult { wigner, residuals, shots_used: set.shots() })
}

fn slice_l1(w: &WignerGrid, grid: &GridSpec, phi: f64, density: &[f64]) -> f64 {
    let slice = wigner_marginal_on(w, phi + FRAC_PI_2, grid);
    l1_distance(&slice, density, grid.dx())
}

/// L1 distance between each Radon slice of `w` and the matching input
/// marginal of `set`.
pub fn radon_residuals(w: &WignerGrid, set: &MarginalSet) -> Vec<f64> {
    set.entries
        .par_iter()
        .map(|e| slice_l1(w, &set.grid, e.phi, &e.density))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wigner::wigner_on;
    use num_complex::Complex64;
    use std::f64::consts::SQRT_2;

    fn sweep(signal: StatePreset, count: usize, shots: usize) -> SweepConfig {
        SweepConfig {
            signal,
            meter: StatePreset::squeezed(3.0),
            kappa: 1.0,
            phases: (0..count).map(|k| k as f64 * PI / count as f64).collect(),
            shots,
            seed: 7,
            signal_grid: GridSpec::default(),
            meter_grid: GridSpec::default(),
            estimator: DensityEstimator::Histogram,
        }
    }

    #[test]
    fn phase_list_validation() {
        let mut c = sweep(StatePreset::Vacuum, 4, 0);
        c.phases = vec![];
        assert!(sweep_phases(&c).is_err());
        c.phases = vec![0.1, 0.1];
        assert!(sweep_phases(&c).is_err());
        c.phases = vec![0.2, 0.1];
        assert!(sweep_phases(&c).is_err());
        c.phases = vec![0.0, PI];
        assert!(sweep_phases(&c).is_err());
        assert!(check_coverage(&[0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]).is_err());
        let even: Vec<f64> = (0..8).map(|k| k as f64 * PI / 8.0).collect();
        assert!(check_coverage(&even).is_ok());
        assert!(check_coverage(&even[..7]).is_err());
    }

    #[test]
    fn exact_sweep_equals_meter_marginals() {
        let c = sweep(StatePreset::coherent(Complex64::new(1.0, 0.5)), 3, 0);
        let (set, records) = sweep_phases(&c).unwrap();
        assert!(records.is_empty());
        let signal = make_state(&c.signal, &c.signal_grid).unwrap();
        for e in &set.entries {
            let cfg = CouplingConfig::orthogonal(1.0, e.phi).unwrap();
            let meter = make_state_at(&c.meter, &c.meter_grid, cfg.theta()).unwrap();
            let w = qnd::meter_marginal(&qnd::entangle(&signal, &meter, &cfg).unwrap());
            assert_eq!(e.density, w);
            assert!((e.density.iter().sum::<f64>() * c.signal_grid.dx() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn coherent_marginals_trace_a_circle() {
        let alpha = 2.0;
        let c = sweep(StatePreset::coherent(Complex64::new(alpha, 0.0)), 16, 0);
        let (set, _) = sweep_phases(&c).unwrap();
        let g = set.grid;
        for e in &set.entries {
            let mean: f64 = e.density.iter().enumerate().map(|(k, d)| d * g.point(k)).sum::<f64>() * g.dx();
            let expected = SQRT_2 * alpha * (e.phi + FRAC_PI_2).cos();
            assert!((mean - expected).abs() < 1e-6, "phi {}: {mean} vs {expected}", e.phi);
        }
    }

    #[test]
    fn sampling_error_shrinks_like_inverse_root_shots() {
        let exact = sweep_phases(&sweep(StatePreset::Vacuum, 1, 0)).unwrap().0;
        let dx = exact.grid.dx();
        let err = |shots: usize| {
            let mut total = 0.0;
            for seed in 0..4 {
                let mut c = sweep(StatePreset::Vacuum, 1, shots);
                c.seed = seed;
                let s = sweep_phases(&c).unwrap().0;
                // compare on cells of 16 grid points so each bin holds many counts
                let coarse = |d: &[f64]| d.chunks(16).map(|ch| ch.iter().sum::<f64>() * dx).collect::<Vec<_>>();
                let (a, b) = (coarse(&s.entries[0].density), coarse(&exact.entries[0].density));
                total += a.iter().zip(&b).map(|(x, y)| (x - y).abs()).sum::<f64>();
            }
            total / 4.0
        };
        let ratio = err(1_000) / err(100_000);
        assert!((5.0..=20.0).contains(&ratio), "{ratio}");
    }

    #[test]
    fn sampled_sweep_is_deterministic() {
        let c = sweep(StatePreset::Vacuum, 3, 500);
        let (a, ra) = sweep_phases(&c).unwrap();
        let (b, rb) = sweep_phases(&c).unwrap();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
        assert_eq!(ra.len(), 1500);
        assert_eq!(a.shots(), 1500);
    }

    fn reconstruct(signal: StatePreset, count: usize) -> (ReconstructionResult, WignerGrid) {
        let c = sweep(signal, count, 0);
        let (set, _) = sweep_phases(&c).unwrap();
        let opts = FbpOptions::for_grid(&set.grid);
        let rec = reconstruct_wigner(&set, &opts).unwrap();
        let wf = make_state(&c.signal, &c.signal_grid).unwrap();
        let truth = wigner_on(&wf, &opts.x_grid, &opts.p_grid).unwrap();
        (rec, truth)
    }

    #[test]
    fn vacuum_reconstruction() {
        let (rec, truth) = reconstruct(StatePreset::Vacuum, 16);
        let dev = rec.wigner.max_abs_diff(&truth).unwrap();
        assert!(dev < 0.01, "{dev}");
        assert!((rec.wigner.total() - 1.0).abs() < 1e-12);
        assert!(rec.residuals.unwrap().iter().all(|&r| r >= 0.0));
    }

    #[test]
    fn coherent_peak_location() {
        let (rec, _) = reconstruct(StatePreset::coherent(Complex64::new(2.0, 0.0)), 16);
        let (x, p) = rec.wigner.argmax();
        assert!((x - 2.0 * SQRT_2).abs() <= rec.wigner.x_grid.dx());
        assert!(p.abs() <= rec.wigner.p_grid.dx());
    }

    #[test]
    fn cat_fringes_are_reconstructed() {
        let (rec, truth) = reconstruct(StatePreset::cat(Complex64::new(2.0, 0.0), 1), 32);
        let w = &rec.wigner;
        let centre = (w.x_grid.nearest_index(0.0), w.p_grid.nearest_index(0.0));
        assert!(w.values[centre] > 0.0);
        assert!(w.min() < -0.05);
        assert!(w.max_abs_diff(&truth).unwrap() < 0.03);
    }

    #[test]
    fn reconstructed_slices_match_inputs() {
        let c = sweep(StatePreset::Vacuum, 32, 0);
        let (vac, _) = sweep_phases(&c).unwrap();
        let opts = FbpOptions::for_grid(&vac.grid);
        let rv = reconstruct_wigner(&vac, &opts).unwrap();
        let reference = radon_residuals(&rv.wigner, &vac).iter().cloned().fold(0.0, f64::max);
        let c = sweep(StatePreset::coherent(Complex64::new(1.0, 0.5)), 32, 0);
        let (coh, _) = sweep_phases(&c).unwrap();
        let rc = reconstruct_wigner(&coh, &opts).unwrap();
        let worst = radon_residuals(&rc.wigner, &coh).iter().cloned().fold(0.0, f64::max);
        assert!(worst < 2.0 * reference, "{worst} vs {reference}");
    }
}
