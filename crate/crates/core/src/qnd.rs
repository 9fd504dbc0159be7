//! Signal/meter entanglement through the QND coupling, meter outcome
//! statistics, and the conditioned signal state.
//!
//! The coupling is parameterized by `kappa = 2 sigma t`. The signal is
//! represented at angle `phi + pi/2` (the quadrature that commutes with the
//! interaction) and the meter at its readout angle `theta`. In those bases
//! the evolved joint amplitude is
//!
//! ```text
//! Psi(Xs, Xm) = psi_s(Xs) * exp(-i Phi(Xs, Xm)) * psi_m(Xm - kappa Xs sin(theta - phi))
//! ```
//!
//! with `Phi` given by [`interaction_phase`].

use std::f64::consts::FRAC_PI_2;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::states::QuadratureWaveFunction;
use crate::transforms::{rotate_to, wrapped_mass, Shifter, MAX_WRAPPED_MASS};

/// Outcomes whose density falls below this cannot be conditioned on.
pub const MIN_OUTCOME_DENSITY: f64 = 1e-14;

fn reduce(angle: f64) -> f64 {
    angle.rem_euclid(2.0 * std::f64::consts::PI)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CouplingConfig {
    kappa: f64,
    phi: f64,
    theta: f64,
}

impl CouplingConfig {
    pub fn new(kappa: f64, phi: f64, theta: f64) -> Result<Self> {
        if !kappa.is_finite() || kappa <= 0.0 {
            return Err(Error::InvalidCoupling(format!(
                "kappa must be positive and finite, got {kappa}"
            )));
        }
        if !phi.is_finite() || !theta.is_finite() {
            return Err(Error::InvalidCoupling("angles must be finite".into()));
        }
        Ok(Self {
            kappa,
            phi: reduce(phi),
            theta: reduce(theta),
        })
    }

    /// Meter read out at `theta = phi + pi/2`, where the shift is maximal.
    pub fn orthogonal(kappa: f64, phi: f64) -> Result<Self> {
        Self::new(kappa, phi, phi + FRAC_PI_2)
    }

    /// Meter read out at `theta = phi`.
    pub fn in_phase(kappa: f64, phi: f64) -> Result<Self> {
        Self::new(kappa, phi, phi)
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// `theta - phi`.
    pub fn delta(&self) -> f64 {
        self.theta - self.phi
    }

    /// Representation angle of the signal, `phi + pi/2`.
    pub fn signal_angle(&self) -> f64 {
        reduce(self.phi + FRAC_PI_2)
    }

    /// Meter displacement per unit signal quadrature, `kappa sin(theta - phi)`.
    pub fn shift_per_unit(&self) -> f64 {
        self.kappa * self.delta().sin()
    }
}

/// `gamma = (sigma_t x_s)^2 sin(2 delta) + 2 sigma_t x_s x_m cos(delta)`.
pub fn gamma_phase(x_s: f64, x_m: f64, delta: f64, sigma_t: f64) -> f64 {
    let a = sigma_t * x_s;
    a * a * (2.0 * delta).sin() + 2.0 * a * x_m * delta.cos()
}

/// Phase imprinted on `Psi(Xs, Xm)` by the exact unitary for the
/// quadrature phase convention of this crate.
///
/// This is `gamma_phase` evaluated at `-delta`: the cross term
/// `kappa Xs Xm cos(delta)` is unchanged while the quadratic term
/// `(kappa Xs / 2)^2 sin(2 delta)` enters with a minus sign. The Fock-basis
/// oracle confirms this sign at intermediate readout angles.
pub fn interaction_phase(x_s: f64, x_m: f64, cfg: &CouplingConfig) -> f64 {
    gamma_phase(x_s, x_m, -cfg.delta(), 0.5 * cfg.kappa)
}

/// Two-mode amplitude over the product of the signal and meter grids.
/// Rows index `X_s`, columns index `X_m`.
#[derive(Debug, Clone)]
pub struct JointState {
    pub signal_grid: GridSpec,
    pub meter_grid: GridSpec,
    pub signal_angle: f64,
    pub meter_angle: f64,
    pub coupling: CouplingConfig,
    pub amplitudes: Array2<Complex64>,
}

impl JointState {
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>()
            * self.signal_grid.dx()
            * self.meter_grid.dx()
    }

    /// Density of the signal quadrature `X(phi + pi/2)`.
    pub fn signal_marginal(&self) -> Vec<f64> {
        let dm = self.meter_grid.dx();
        self.amplitudes
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|a| a.norm_sqr()).sum::<f64>() * dm)
            .collect()
    }
}

/// Product of the probability that falls off the meter box over all rows.
fn wrapped_probability(signal: &[f64], ds: f64, meter: &[f64], grid: &GridSpec, shifts: &[f64]) -> f64 {
    signal
        .iter()
        .zip(shifts)
        .filter(|(p, _)| **p > 0.0)
        .map(|(p, &s)| p * ds * wrapped_mass(meter, grid, s))
        .sum()
}

/// Builds the entangled state after the QND interaction.
///
/// Both inputs are rotated internally: the signal to `phi + pi/2` and the
/// meter to `theta`.
pub fn entangle(
    signal: &QuadratureWaveFunction,
    meter: &QuadratureWaveFunction,
    cfg: &CouplingConfig,
) -> Result<JointState> {
    let sgrid = *signal.grid();
    let mgrid = *meter.grid();
    sgrid.require_symmetric()?;
    mgrid.require_symmetric()?;

    let psi_s = rotate_to(signal, cfg.signal_angle())?;
    let psi_m = rotate_to(meter, cfg.theta())?;

    let xs = sgrid.points();
    let xm = mgrid.points();
    let per_unit = cfg.shift_per_unit();
    let shifts: Vec<f64> = xs.iter().map(|x| per_unit * x).collect();

    let lost = wrapped_probability(&psi_s.density(), sgrid.dx(), &psi_m.density(), &mgrid, &shifts);
    if lost > MAX_WRAPPED_MASS {
        return Err(Error::StateOffGrid(format!(
            "shifted meter leaves its grid (probability {lost:.3e} wraps around); \
             use a wider meter grid or a smaller kappa"
        )));
    }

    let shifter = Shifter::new(&mgrid);
    let ns = sgrid.len();
    let nm = mgrid.len();
    let rows: Vec<Vec<Complex64>> = (0..ns)
        .into_par_iter()
        .map(|i| {
            let mut row = psi_m.amplitudes().to_vec();
            shifter.shift(&mut row, shifts[i]);
            let a = psi_s.amplitudes()[i];
            for (j, v) in row.iter_mut().enumerate() {
                let phase = interaction_phase(xs[i], xm[j], cfg);
                *v *= a * Complex64::from_polar(1.0, -phase);
            }
            row
        })
        .collect();
    let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
    let amplitudes = Array2::from_shape_vec((ns, nm), flat).expect("row-major joint shape");

    Ok(JointState {
        signal_grid: sgrid,
        meter_grid: mgrid,
        signal_angle: cfg.signal_angle(),
        meter_angle: cfg.theta(),
        coupling: *cfg,
        amplitudes,
    })
}

/// Meter outcome density `W(X_m) = sum_s |Psi(Xs, Xm)|^2 dXs`.
pub fn meter_marginal(joint: &JointState) -> Vec<f64> {
    let ds = joint.signal_grid.dx();
    let mut w = vec![0.0; joint.meter_grid.len()];
    for row in joint.amplitudes.rows() {
        for (wj, a) in w.iter_mut().zip(row.iter()) {
            *wj += a.norm_sqr();
        }
    }
    w.iter_mut().for_each(|v| *v *= ds);
    w
}

/// Multiplies by a global phase that makes the largest sample real-positive.
pub fn fix_global_phase(amps: &mut [Complex64]) {
    let peak = amps
        .iter()
        .copied()
        .max_by(|a, b| a.norm_sqr().total_cmp(&b.norm_sqr()))
        .unwrap_or_default();
    if peak.norm() > 0.0 {
        let u = peak.conj() / peak.norm();
        amps.iter_mut().for_each(|a| *a *= u);
    }
}

/// Signal state after the meter returned a given grid outcome.
#[derive(Debug, Clone)]
pub struct ConditionedState {
    pub outcome: f64,
    pub outcome_index: usize,
    pub probability_density: f64,
    pub state: QuadratureWaveFunction,
}

pub fn condition(joint: &JointState, outcome_index: usize) -> Result<ConditionedState> {
    let nm = joint.meter_grid.len();
    if outcome_index >= nm {
        return Err(Error::Precondition(format!(
            "outcome index {outcome_index} outside meter grid of {nm} points"
        )));
    }
    let outcome = joint.meter_grid.point(outcome_index);
    let mut column: Vec<Complex64> = joint.amplitudes.column(outcome_index).to_vec();
    let density = column.iter().map(|a| a.norm_sqr()).sum::<f64>() * joint.signal_grid.dx();
    if !(density > MIN_OUTCOME_DENSITY) {
        return Err(Error::ZeroProbabilityOutcome { outcome, density });
    }
    let s = 1.0 / density.sqrt();
    column.iter_mut().for_each(|a| *a *= s);
    fix_global_phase(&mut column);
    let state = QuadratureWaveFunction::unnormalized(joint.signal_grid, joint.signal_angle, column)?;
    Ok(ConditionedState {
        outcome,
        outcome_index,
        probability_density: density,
        state,
    })
}

/// The filter `f(Xs | Xm)` sampled on the signal grid.
#[derive(Debug, Clone)]
pub struct FilterFunction {
    pub grid: GridSpec,
    pub outcome: f64,
    pub probability_density: f64,
    pub values: Vec<Complex64>,
}

/// Evaluates a grid function at arbitrary points by its trigonometric
/// (band-limited) interpolant, summed directly. Points outside the box
/// evaluate to zero instead of a periodic image.
fn trig_interpolate(amps: &[Complex64], grid: &GridSpec, points: &[f64]) -> Vec<Complex64> {
    use rustfft::FftPlanner;
    let n = amps.len();
    let mut spec = amps.to_vec();
    FftPlanner::<f64>::new().plan_fft_forward(n).process(&mut spec);
    let ks = GridSpec::fft_wavenumbers(n, grid.dx());
    let inv_n = 1.0 / n as f64;
    points
        .par_iter()
        .map(|&x| {
            if x < grid.x_min() || x >= grid.x_max() {
                return Complex64::default();
            }
            let u = x - grid.x_min();
            spec.iter()
                .zip(&ks)
                .map(|(c, &k)| c * Complex64::from_polar(1.0, k * u))
                .sum::<Complex64>()
                * inv_n
        })
        .collect()
}

/// Filter imprinted on the signal by the meter outcome `outcome` (a meter
/// grid point). `signal` and `meter` are taken before the interaction and
/// rotated internally like in [`entangle`].
pub fn filter_function(
    signal: &QuadratureWaveFunction,
    meter: &QuadratureWaveFunction,
    outcome: f64,
    cfg: &CouplingConfig,
) -> Result<FilterFunction> {
    let sgrid = *signal.grid();
    let mgrid = *meter.grid();
    if mgrid.exact_index(outcome, 1e-9).is_none() {
        return Err(Error::Precondition(format!(
            "outcome {outcome} is not a meter grid point"
        )));
    }
    let psi_s = rotate_to(signal, cfg.signal_angle())?;
    let psi_m = rotate_to(meter, cfg.theta())?;
    let xs = sgrid.points();
    let args: Vec<f64> = xs.iter().map(|x| outcome - cfg.shift_per_unit() * x).collect();
    let shifted_meter = trig_interpolate(psi_m.amplitudes(), &mgrid, &args);

    let density = psi_s
        .amplitudes()
        .iter()
        .zip(&shifted_meter)
        .map(|(a, m)| a.norm_sqr() * m.norm_sqr())
        .sum::<f64>()
        * sgrid.dx();
    if !(density > MIN_OUTCOME_DENSITY) {
        return Err(Error::ZeroProbabilityOutcome { outcome, density });
    }
    let scale = 1.0 / density.sqrt();
    let values = xs
        .iter()
        .zip(&shifted_meter)
        .map(|(&x, m)| m * Complex64::from_polar(scale, -interaction_phase(x, outcome, cfg)))
        .collect();
    Ok(FilterFunction {
        grid: sgrid,
        outcome,
        probability_density: density,
        values,
    })
}

/// `psi_s * f`, renormalized and phase-fixed: the conditioned state built
/// from the filter rather than from the joint amplitude.
pub fn apply_filter(
    signal: &QuadratureWaveFunction,
    filter: &FilterFunction,
    cfg: &CouplingConfig,
) -> Result<QuadratureWaveFunction> {
    let psi_s = rotate_to(signal, cfg.signal_angle())?;
    let mut amps: Vec<Complex64> = psi_s
        .amplitudes()
        .iter()
        .zip(&filter.values)
        .map(|(a, f)| a * f)
        .collect();
    fix_global_phase(&mut amps);
    QuadratureWaveFunction::unnormalized(filter.grid, cfg.signal_angle(), amps)?.renormalize()
}
