//! Truncated Fock-basis reference implementation.
//!
//! States are coefficient vectors `c_n`, `n = 0..=cutoff`. The interaction
//! `exp(-i kappa A (x) B)` with `A = X_s(phi + pi/2)` and `B = X_m(phi)` is
//! exponentiated exactly on the truncated space by diagonalizing the two
//! Hermitian factors: if `A = Wa Da Wa^+` and `B = Wb Db Wb^+`, then the
//! exponential is `(Wa (x) Wb) exp(-i kappa Da (x) Db) (Wa (x) Wb)^+`.
//!
//! Quadrature operators follow the crate's phase convention
//! `X(theta) = exp(-i theta n) X exp(i theta n) = (a e^{i theta} + a^+ e^{-i theta}) / sqrt2`,
//! whose eigenfunctions are `<X; theta | n> = e^{i n theta} h_n(X)`.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::qnd::{self, CouplingConfig};
use crate::states::{self, QuadratureWaveFunction, StatePreset};

pub const DEFAULT_CUTOFF: usize = 64;
/// Mass allowed in the top [`EDGE_LEVELS`] levels of an evolved state.
pub const EVOLVED_TAIL: f64 = 1e-8;
/// `|c_N|^2` allowed for a prepared state.
pub const PREPARED_TAIL: f64 = 1e-10;
pub const EDGE_LEVELS: usize = 5;

#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    coefficients: DVector<Complex64>,
}

impl FockState {
    pub fn new(coefficients: Vec<Complex64>) -> Result<Self> {
        let mut c = DVector::from_vec(coefficients);
        let n = c.norm_squared();
        if !(n > states::MIN_NORM) {
            return Err(Error::ZeroNorm);
        }
        c /= Complex64::new(n.sqrt(), 0.0);
        let last = c[c.len() - 1].norm_sqr();
        if last > PREPARED_TAIL {
            return Err(Error::Truncation(format!(
                "|c_N|^2 = {last:.3e} at cutoff {}",
                c.len() - 1
            )));
        }
        Ok(Self { coefficients: c })
    }

    pub fn cutoff(&self) -> usize {
        self.coefficients.len() - 1
    }

    pub fn coefficients(&self) -> &DVector<Complex64> {
        &self.coefficients
    }
}

fn raw_coefficients(preset: &StatePreset, cutoff: usize) -> Vec<Complex64> {
    let n = cutoff + 1;
    let mut c = vec![Complex64::default(); n];
    match preset {
        StatePreset::Vacuum => c[0] = Complex64::new(1.0, 0.0),
        StatePreset::Coherent { alpha_re, alpha_im } => {
            coherent_into(Complex64::new(*alpha_re, *alpha_im), &mut c, 1.0)
        }
        StatePreset::SqueezedVacuum { r } => {
            // c_{2k} = (cosh r)^{-1/2} (-tanh r)^k sqrt((2k)!) / (2^k k!)
            let t = -r.tanh();
            let mut v = 1.0 / r.cosh().sqrt();
            let mut k = 0;
            while 2 * k < n {
                c[2 * k] = Complex64::new(v, 0.0);
                let kf = k as f64;
                v *= t * ((2.0 * kf + 1.0) * (2.0 * kf + 2.0)).sqrt() / (2.0 * (kf + 1.0));
                k += 1;
            }
        }
        StatePreset::Fock { n: m } => {
            if (*m as usize) < n {
                c[*m as usize] = Complex64::new(1.0, 0.0);
            }
        }
        StatePreset::Cat {
            alpha_re,
            alpha_im,
            parity,
        } => {
            let a = Complex64::new(*alpha_re, *alpha_im);
            coherent_into(a, &mut c, 1.0);
            coherent_into(-a, &mut c, *parity as f64);
            let norm = (2.0 * (1.0 + *parity as f64 * (-2.0 * a.norm_sqr()).exp())).sqrt();
            c.iter_mut().for_each(|v| *v /= norm);
        }
        StatePreset::Superposition { terms } => {
            for t in terms {
                let sub = raw_coefficients(&t.state, cutoff);
                for (ci, si) in c.iter_mut().zip(sub) {
                    *ci += t.weight() * si;
                }
            }
        }
    }
    c
}

fn coherent_into(alpha: Complex64, c: &mut [Complex64], weight: f64) {
    let mut v = Complex64::new(weight * (-0.5 * alpha.norm_sqr()).exp(), 0.0);
    for (k, ck) in c.iter_mut().enumerate() {
        *ck += v;
        v *= alpha / ((k + 1) as f64).sqrt();
    }
}

/// Fock coefficients of a preset, normalized and truncation-checked.
pub fn fock_state(preset: &StatePreset, cutoff: usize) -> Result<FockState> {
    let problems = preset.violations();
    if !problems.is_empty() {
        return Err(Error::InvalidPreset(problems.join("; ")));
    }
    if let StatePreset::Fock { n } = preset {
        if *n as usize > cutoff {
            return Err(Error::Truncation(format!("fock n = {n} above cutoff {cutoff}")));
        }
    }
    FockState::new(raw_coefficients(preset, cutoff))
}

/// Fock coefficients of the state whose wavefunction at `angle` is the preset.
pub fn fock_state_at(preset: &StatePreset, cutoff: usize, angle: f64) -> Result<FockState> {
    let base = fock_state(preset, cutoff)?;
    let c = base
        .coefficients()
        .iter()
        .enumerate()
        .map(|(n, c)| c * Complex64::from_polar(1.0, -(n as f64) * angle))
        .collect();
    FockState::new(c)
}

/// Rows `x_k`, columns `n`: `e^{i n angle} h_n(x_k)`.
fn hermite_table(grid: &GridSpec, cutoff: usize, angle: f64) -> DMatrix<Complex64> {
    let pts = grid.points();
    let mut m = DMatrix::from_element(pts.len(), cutoff + 1, Complex64::default());
    let phases: Vec<Complex64> = (0..=cutoff)
        .map(|n| Complex64::from_polar(1.0, n as f64 * angle))
        .collect();
    for (i, &x) in pts.iter().enumerate() {
        let mut prev = PI.powf(-0.25) * (-0.5 * x * x).exp();
        m[(i, 0)] = phases[0] * prev;
        if cutoff == 0 {
            continue;
        }
        let mut cur = SQRT_2 * x * prev;
        m[(i, 1)] = phases[1] * cur;
        for n in 1..cutoff {
            let nf = n as f64;
            let next = (2.0 / (nf + 1.0)).sqrt() * x * cur - (nf / (nf + 1.0)).sqrt() * prev;
            prev = cur;
            cur = next;
            m[(i, n + 1)] = phases[n + 1] * cur;
        }
    }
    m
}

/// `psi(X; angle) = sum_n c_n e^{i n angle} h_n(X)` on `grid`.
pub fn fock_quadrature_wavefunction(
    state: &FockState,
    angle: f64,
    grid: &GridSpec,
) -> Result<QuadratureWaveFunction> {
    let table = hermite_table(grid, state.cutoff(), angle);
    let amps = &table * state.coefficients();
    QuadratureWaveFunction::unnormalized(*grid, angle, amps.iter().copied().collect())
}

/// Matrix of `X(angle)` on `0..=cutoff`.
pub fn quadrature_operator(cutoff: usize, angle: f64) -> DMatrix<Complex64> {
    let n = cutoff + 1;
    let mut m = DMatrix::from_element(n, n, Complex64::default());
    for k in 0..cutoff {
        // <k+1| a^+ |k> sqrt(k+1) carries e^{-i angle}; <k| a |k+1> carries e^{i angle}
        let v = ((k + 1) as f64 / 2.0).sqrt();
        m[(k + 1, k)] = Complex64::from_polar(v, -angle);
        m[(k, k + 1)] = Complex64::from_polar(v, angle);
    }
    m
}

/// Eigen-decomposition `X(angle) = W diag(d) W^+`.
fn quadrature_eigen(cutoff: usize, angle: f64) -> (DMatrix<Complex64>, Vec<f64>) {
    let n = cutoff + 1;
    let mut x = DMatrix::<f64>::zeros(n, n);
    for k in 0..cutoff {
        let v = ((k + 1) as f64 / 2.0).sqrt();
        x[(k + 1, k)] = v;
        x[(k, k + 1)] = v;
    }
    let eig = SymmetricEigen::new(x);
    let mut w = eig.eigenvectors.map(|v| Complex64::new(v, 0.0));
    for k in 0..n {
        let p = Complex64::from_polar(1.0, -(k as f64) * angle);
        for j in 0..n {
            w[(k, j)] *= p;
        }
    }
    (w, eig.eigenvalues.iter().copied().collect())
}

/// Two-mode coefficients `C[n_s, n_m]` with the angles at which the modes
/// are to be read.
#[derive(Debug, Clone)]
pub struct FockJointState {
    pub coefficients: DMatrix<Complex64>,
    pub signal_angle: f64,
    pub meter_angle: f64,
}

impl FockJointState {
    pub fn norm(&self) -> f64 {
        self.coefficients.norm_squared()
    }

    fn edge_mass(&self) -> (f64, f64) {
        let c = &self.coefficients;
        let (rs, cs) = c.shape();
        let es = EDGE_LEVELS.min(rs);
        let em = EDGE_LEVELS.min(cs);
        let sig = c.rows(rs - es, es).norm_squared();
        let met = c.columns(cs - em, em).norm_squared();
        (sig, met)
    }

    /// Joint amplitude on the product grid at the stored angles.
    pub fn grid_amplitudes(&self, signal_grid: &GridSpec, meter_grid: &GridSpec) -> DMatrix<Complex64> {
        let (rs, cs) = self.coefficients.shape();
        let gs = hermite_table(signal_grid, rs - 1, self.signal_angle);
        let gm = hermite_table(meter_grid, cs - 1, self.meter_angle);
        &gs * &self.coefficients * gm.transpose()
    }
}

/// Applies `exp(-i kappa X_s(phi + pi/2) X_m(phi))` to `signal (x) meter`
/// and reads the meter at `theta_readout`.
pub fn fock_evolve(
    signal: &FockState,
    meter: &FockState,
    kappa: f64,
    phi: f64,
    theta_readout: f64,
) -> Result<FockJointState> {
    let (wa, da) = quadrature_eigen(signal.cutoff(), phi + FRAC_PI_2);
    let (wb, db) = quadrature_eigen(meter.cutoff(), phi);
    let c = signal.coefficients() * meter.coefficients().transpose();
    let mut t = wa.adjoint() * c * wb.map(|v| v.conj());
    for i in 0..da.len() {
        for j in 0..db.len() {
            t[(i, j)] *= Complex64::from_polar(1.0, -kappa * da[i] * db[j]);
        }
    }
    let evolved = &wa * t * wb.transpose();
    let joint = FockJointState {
        coefficients: evolved,
        signal_angle: phi + FRAC_PI_2,
        meter_angle: theta_readout,
    };
    let (sig, met) = joint.edge_mass();
    if sig > EVOLVED_TAIL || met > EVOLVED_TAIL {
        return Err(Error::Truncation(format!(
            "evolved mass in the top {EDGE_LEVELS} levels: signal {sig:.3e}, meter {met:.3e}"
        )));
    }
    Ok(joint)
}

/// Full interaction matrix `kappa A (x) B` on the product space
/// (row index `n_s * (N_m + 1) + n_m`). Dense; only for small cutoffs.
pub fn interaction_matrix(cutoff_s: usize, cutoff_m: usize, kappa: f64, phi: f64) -> DMatrix<Complex64> {
    let a = quadrature_operator(cutoff_s, phi + FRAC_PI_2);
    let b = quadrature_operator(cutoff_m, phi);
    a.kronecker(&b) * Complex64::new(kappa, 0.0)
}

/// A protocol run that both back ends can represent.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub signal: StatePreset,
    pub meter: StatePreset,
    pub coupling: CouplingConfig,
    pub signal_grid: GridSpec,
    pub meter_grid: GridSpec,
    pub cutoff: usize,
    /// Meter grid index to condition on; defaults to the most likely outcome.
    pub outcome_index: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleReport {
    pub joint_norm_drift: f64,
    pub marginal_max_deviation: f64,
    pub conditioned_infidelity: f64,
    pub outcome_index: usize,
}

/// Meter density and conditioned signal computed from a Fock joint state.
pub fn fock_meter_marginal(joint: &FockJointState, signal_grid: &GridSpec, meter_grid: &GridSpec) -> Vec<f64> {
    let psi = joint.grid_amplitudes(signal_grid, meter_grid);
    let ds = signal_grid.dx();
    (0..psi.ncols())
        .map(|j| psi.column(j).iter().map(|a| a.norm_sqr()).sum::<f64>() * ds)
        .collect()
}

pub fn oracle_compare(scenario: &Scenario) -> Result<OracleReport> {
    let cfg = &scenario.coupling;
    let fs = fock_state(&scenario.signal, scenario.cutoff)?;
    let fm = fock_state(&scenario.meter, scenario.cutoff)?;
    let fjoint = fock_evolve(&fs, &fm, cfg.kappa(), cfg.phi(), cfg.theta())?;
    let fpsi = fjoint.grid_amplitudes(&scenario.signal_grid, &scenario.meter_grid);

    let s = states::make_state(&scenario.signal, &scenario.signal_grid)?;
    let m = states::make_state(&scenario.meter, &scenario.meter_grid)?;
    let gjoint = qnd::entangle(&s, &m, cfg)?;
    let gw = qnd::meter_marginal(&gjoint);

    let ds = scenario.signal_grid.dx();
    let fw: Vec<f64> = (0..fpsi.ncols())
        .map(|j| fpsi.column(j).iter().map(|a| a.norm_sqr()).sum::<f64>() * ds)
        .collect();
    let marginal_max_deviation = gw
        .iter()
        .zip(&fw)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let idx = scenario.outcome_index.unwrap_or_else(|| {
        gw.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    });
    let gc = qnd::condition(&gjoint, idx)?;
    let col: Vec<Complex64> = fpsi.column(idx).iter().copied().collect();
    let fc = QuadratureWaveFunction::unnormalized(scenario.signal_grid, cfg.signal_angle(), col)?
        .renormalize()?;
    let conditioned_infidelity = (1.0 - gc.state.fidelity(&fc)).abs();

    Ok(OracleReport {
        joint_norm_drift: (fjoint.norm() - 1.0).abs(),
        marginal_max_deviation,
        conditioned_infidelity,
        outcome_index: idx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn fock_grid_samples_match_recursion() {
        for n in 0..=10u32 {
            let fs = fock_state(&StatePreset::fock(n), 16).unwrap();
            let o = fock_quadrature_wavefunction(&fs, 0.0, &grid()).unwrap();
            let g = states::make_state(&StatePreset::fock(n), &grid()).unwrap();
            assert!(max_diff(o.amplitudes(), g.amplitudes()) < 1e-10, "n = {n}");
        }
    }

    #[test]
    fn fock_zero_is_vacuum_and_eigenstates_keep_modulus() {
        let v = fock_quadrature_wavefunction(&fock_state(&StatePreset::Vacuum, 8).unwrap(), 0.0, &grid()).unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let f1 = fock_state(&StatePreset::fock(1), 8).unwrap();
        let a = fock_quadrature_wavefunction(&f1, 0.0, &grid()).unwrap();
        let b = fock_quadrature_wavefunction(&f1, PI / 3.0, &grid()).unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x.norm() - y.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn rotated_preparation_matches_grid_frame() {
        let p = StatePreset::squeezed(0.5);
        let fs = fock_state_at(&p, 64, 0.7).unwrap();
        let o = fock_quadrature_wavefunction(&fs, 0.7, &grid()).unwrap();
        let g = states::make_state(&p, &grid()).unwrap();
        assert!(max_diff(o.amplitudes(), g.amplitudes()) < 1e-8);
    }

    #[test]
    fn presets_match_grid_construction() {
        let cases = [
            (StatePreset::coherent(Complex64::new(1.5, 0.0)), 40),
            (StatePreset::coherent(Complex64::new(-0.7, 1.1)), 48),
            (StatePreset::squeezed(0.8), 96),
            (StatePreset::squeezed(-0.3), 96),
            (StatePreset::cat(Complex64::new(2.0, 0.0), 1), 64),
            (StatePreset::cat(Complex64::new(1.0, 0.5), -1), 48),
        ];
        for (p, cutoff) in cases {
            let fs = fock_state(&p, cutoff).unwrap();
            let o = fock_quadrature_wavefunction(&fs, 0.0, &grid()).unwrap();
            assert!((o.norm() - 1.0).abs() < 1e-8);
            let g = states::make_state(&p, &grid()).unwrap();
            assert!(max_diff(o.amplitudes(), g.amplitudes()) < 1e-8, "{p:?}");
        }
    }

    #[test]
    fn truncation_is_detected() {
        assert!(matches!(
            fock_state(&StatePreset::coherent(Complex64::new(4.0, 0.0)), 20),
            Err(Error::Truncation(_))
        ));
        assert!(fock_state(&StatePreset::fock(30), 20).is_err());
    }

    #[test]
    fn zero_coupling_is_identity() {
        let s = fock_state(&StatePreset::coherent(Complex64::new(1.0, 0.2)), 40).unwrap();
        let m = fock_state(&StatePreset::squeezed(0.4), 40).unwrap();
        let j = fock_evolve(&s, &m, 0.0, 0.3, 0.3).unwrap();
        let prod = s.coefficients() * m.coefficients().transpose();
        assert!((&j.coefficients - prod).norm() < 1e-12);
    }

    #[test]
    fn evolution_is_unitary_and_conserves_measured_quadrature() {
        let s = fock_state(&StatePreset::cat(Complex64::new(1.0, 0.4), 1), 48).unwrap();
        let m = fock_state(&StatePreset::Vacuum, 48).unwrap();
        let phi = 0.7;
        let j = fock_evolve(&s, &m, 0.9, phi, phi + 1.0).unwrap();
        assert!((j.norm() - 1.0).abs() < 1e-9);
        let psi = j.grid_amplitudes(&grid(), &grid());
        let dm = grid().dx();
        let after: Vec<f64> = (0..psi.nrows())
            .map(|i| psi.row(i).iter().map(|a| a.norm_sqr()).sum::<f64>() * dm)
            .collect();
        let before = fock_quadrature_wavefunction(&s, phi + FRAC_PI_2, &grid()).unwrap().density();
        let d = after.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(d < 1e-8, "{d}");
    }

    #[test]
    fn vacuum_pair_meter_variance() {
        // Heisenberg picture: X_m(phi + pi/2) gains kappa X_s(phi + pi/2), so
        // Var = (1 + kappa^2)/2.
        let v = fock_state(&StatePreset::Vacuum, 48).unwrap();
        let j = fock_evolve(&v, &v, 1.0, 0.0, FRAC_PI_2).unwrap();
        let w = fock_meter_marginal(&j, &grid(), &grid());
        let g = grid();
        let var: f64 = w.iter().enumerate().map(|(k, p)| p * g.point(k).powi(2)).sum::<f64>() * g.dx();
        assert!((var - 1.0).abs() < 1e-9, "{var}");
    }

    #[test]
    fn interaction_commutes_with_measured_quadrature() {
        let (ns, nm) = (20, 20);
        let phi = 0.4;
        let h = interaction_matrix(ns, nm, 1.0, phi);
        let a = quadrature_operator(ns, phi + FRAC_PI_2).kronecker(&DMatrix::<Complex64>::identity(nm + 1, nm + 1));
        let comm = &h * &a - &a * &h;
        let keep = ns - 5;
        let mut worst = 0.0f64;
        for i in 0..=ns {
            for j in 0..=nm {
                for k in 0..=ns {
                    for l in 0..=nm {
                        if i < keep && j < keep && k < keep && l < keep {
                            let r = i * (nm + 1) + j;
                            let c = k * (nm + 1) + l;
                            worst = worst.max(comm[(r, c)].norm());
                        }
                    }
                }
            }
        }
        assert!(worst < 1e-10);
        // the quadrature operator is Hermitian
        let x = quadrature_operator(10, 0.8);
        assert!((&x - x.adjoint()).norm() < 1e-15);
    }

    #[test]
    fn grid_and_oracle_agree_at_intermediate_angle() {
        // A readout angle strictly between in-phase and orthogonal exercises
        // both the shift and the quadratic phase term.
        let sc = Scenario {
            signal: StatePreset::coherent(Complex64::new(0.8, -0.5)),
            meter: StatePreset::Vacuum,
            coupling: CouplingConfig::new(0.9, 0.3, 1.1).unwrap(),
            signal_grid: grid(),
            meter_grid: grid(),
            cutoff: 64,
            outcome_index: Some(540),
        };
        let r = oracle_compare(&sc).unwrap();
        assert!(r.marginal_max_deviation < 1e-8, "{r:?}");
        assert!(r.conditioned_infidelity < 1e-8, "{r:?}");
    }

    #[test]
    fn zero_like_coupling_agrees_tightly() {
        let sc = Scenario {
            signal: StatePreset::fock(2),
            meter: StatePreset::squeezed(0.5),
            coupling: CouplingConfig::new(1e-9, 0.0, 0.7).unwrap(),
            signal_grid: grid(),
            meter_grid: grid(),
            cutoff: 64,
            outcome_index: None,
        };
        let r = oracle_compare(&sc).unwrap();
        assert!(r.marginal_max_deviation < 1e-10);
        assert!(r.conditioned_infidelity < 1e-10);
    }
}
