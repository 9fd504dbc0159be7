//! Grid-sampled quadrature wavefunctions and the state presets used for
//! signals and meters.
//!
//! Conventions: `hbar = 1`, vacuum quadrature variance `1/2`, and a
//! wavefunction at representation angle `theta` is
//! `psi(X; theta) = sum_n c_n e^{i n theta} h_n(X)` where `h_n` are the
//! normalized Hermite functions. Number states are therefore exact
//! eigenfunctions of every rotation.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Amplitudes in the outer 5% of the grid must stay below this.
pub const TAIL_AMPLITUDE: f64 = 1e-8;
/// Pre-normalization norms below this are treated as zero.
pub const MIN_NORM: f64 = 1e-12;
/// Largest number state a preset may request.
pub const MAX_FOCK_N: u32 = 64;

/// Complex amplitudes of one mode in a quadrature representation.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureWaveFunction {
    grid: GridSpec,
    angle: f64,
    amplitudes: Vec<Complex64>,
}

impl QuadratureWaveFunction {
    /// Normalizes `amplitudes` and checks that the state fits the grid.
    pub fn new(grid: GridSpec, angle: f64, amplitudes: Vec<Complex64>) -> Result<Self> {
        let wf = Self::unnormalized(grid, angle, amplitudes)?.renormalize()?;
        wf.check_fits()?;
        Ok(wf)
    }

    /// Wraps amplitudes without normalizing or checking the tails.
    pub(crate) fn unnormalized(
        grid: GridSpec,
        angle: f64,
        amplitudes: Vec<Complex64>,
    ) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            angle,
            amplitudes,
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// `sum |psi|^2 dx`.
    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx()
    }

    pub fn renormalize(mut self) -> Result<Self> {
        let n = self.norm();
        if !(n > MIN_NORM) || !n.is_finite() {
            return Err(Error::ZeroNorm);
        }
        let s = 1.0 / n.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a *= s);
        Ok(self)
    }

    /// Largest amplitude found in the outer 5% at either end of the grid.
    pub fn tail_amplitude(&self) -> f64 {
        let n = self.grid.len();
        let edge = (n / 20).max(1);
        self.amplitudes[..edge]
            .iter()
            .chain(&self.amplitudes[n - edge..])
            .map(|a| a.norm())
            .fold(0.0, f64::max)
    }

    pub fn check_fits(&self) -> Result<()> {
        let tail = self.tail_amplitude();
        if tail > TAIL_AMPLITUDE {
            return Err(Error::StateOffGrid(format!(
                "amplitude {tail:.3e} in the outer 5% of [{}, {}) exceeds {TAIL_AMPLITUDE:e}",
                self.grid.x_min(),
                self.grid.x_max()
            )));
        }
        Ok(())
    }

    /// `|psi(X)|^2` on the grid.
    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn mean(&self) -> f64 {
        let dx = self.grid.dx();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| a.norm_sqr() * self.grid.point(k))
            .sum::<f64>()
            * dx
            / self.norm()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        let dx = self.grid.dx();
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(k, a)| a.norm_sqr() * (self.grid.point(k) - m).powi(2))
            .sum::<f64>()
            * dx
            / self.norm()
    }

    /// `<self|other> = sum conj(self) other dx`; both must share a grid.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.grid, other.grid, "inner product across grids");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    /// `|<self|other>|^2` for normalized states.
    pub fn fidelity(&self, other: &Self) -> f64 {
        self.inner(other).norm_sqr()
    }

    pub(crate) fn with_angle(mut self, angle: f64) -> Self {
        self.angle = angle;
        self
    }
}

/// Free-function form of [`QuadratureWaveFunction::norm`].
pub fn norm(wf: &QuadratureWaveFunction) -> f64 {
    wf.norm()
}

/// Free-function form of [`QuadratureWaveFunction::renormalize`].
pub fn renormalize(wf: QuadratureWaveFunction) -> Result<QuadratureWaveFunction> {
    wf.renormalize()
}

/// One term of a [`StatePreset::Superposition`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuperpositionTerm {
    pub weight_re: f64,
    #[serde(default)]
    pub weight_im: f64,
    pub state: StatePreset,
}

impl SuperpositionTerm {
    pub fn weight(&self) -> Complex64 {
        Complex64::new(self.weight_re, self.weight_im)
    }
}

/// Named test states for the signal and meter modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StatePreset {
    Vacuum,
    Coherent {
        alpha_re: f64,
        #[serde(default)]
        alpha_im: f64,
    },
    /// Squeezed vacuum with `Var X(0) = e^{-2r}/2`; negative `r` gives a
    /// broadened (anti-squeezed) state.
    SqueezedVacuum { r: f64 },
    Fock { n: u32 },
    /// `|alpha> + parity |-alpha>`, normalized.
    Cat {
        alpha_re: f64,
        #[serde(default)]
        alpha_im: f64,
        parity: i32,
    },
    Superposition { terms: Vec<SuperpositionTerm> },
}

impl StatePreset {
    pub fn coherent(alpha: Complex64) -> Self {
        StatePreset::Coherent {
            alpha_re: alpha.re,
            alpha_im: alpha.im,
        }
    }

    pub fn cat(alpha: Complex64, parity: i32) -> Self {
        StatePreset::Cat {
            alpha_re: alpha.re,
            alpha_im: alpha.im,
            parity,
        }
    }

    pub fn squeezed(r: f64) -> Self {
        StatePreset::SqueezedVacuum { r }
    }

    pub fn fock(n: u32) -> Self {
        StatePreset::Fock { n }
    }

    /// Collects every parameter problem rather than stopping at the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_violations("", &mut out);
        out
    }

    fn collect_violations(&self, prefix: &str, out: &mut Vec<String>) {
        let finite = |v: f64, name: &str, out: &mut Vec<String>| {
            if !v.is_finite() {
                out.push(format!("{prefix}{name} must be finite"));
            }
        };
        match self {
            StatePreset::Vacuum => {}
            StatePreset::Coherent { alpha_re, alpha_im } => {
                finite(*alpha_re, "alpha_re", out);
                finite(*alpha_im, "alpha_im", out);
            }
            StatePreset::SqueezedVacuum { r } => finite(*r, "r", out),
            StatePreset::Fock { n } => {
                if *n > MAX_FOCK_N {
                    out.push(format!("{prefix}n = {n} exceeds the Fock cutoff {MAX_FOCK_N}"));
                }
            }
            StatePreset::Cat {
                alpha_re,
                alpha_im,
                parity,
            } => {
                finite(*alpha_re, "alpha_re", out);
                finite(*alpha_im, "alpha_im", out);
                if *parity != 1 && *parity != -1 {
                    out.push(format!("{prefix}parity must be +1 or -1, got {parity}"));
                }
                if *parity == -1 && alpha_re.hypot(*alpha_im) < 1e-6 {
                    out.push(format!("{prefix}odd cat with alpha = 0 is not normalizable"));
                }
            }
            StatePreset::Superposition { terms } => {
                if terms.is_empty() {
                    out.push(format!("{prefix}superposition needs at least one term"));
                }
                for (i, t) in terms.iter().enumerate() {
                    finite(t.weight_re, &format!("terms[{i}].weight_re"), out);
                    finite(t.weight_im, &format!("terms[{i}].weight_im"), out);
                    t.state
                        .collect_violations(&format!("{prefix}terms[{i}].state."), out);
                }
            }
        }
    }

    /// Unnormalized closed-form amplitude at quadrature `x`, angle 0.
    /// Coherent and cat components carry the global phase of their Fock
    /// expansion so that superpositions interfere correctly.
    pub fn amplitude_at(&self, x: f64) -> Complex64 {
        match self {
            StatePreset::Vacuum => Complex64::new(hermite_function(0, x), 0.0),
            StatePreset::Coherent { alpha_re, alpha_im } => {
                coherent_amplitude(Complex64::new(*alpha_re, *alpha_im), x)
            }
            StatePreset::SqueezedVacuum { r } => {
                let e2r = (2.0 * r).exp();
                Complex64::new((e2r / PI).powf(0.25) * (-0.5 * e2r * x * x).exp(), 0.0)
            }
            StatePreset::Fock { n } => Complex64::new(hermite_function(*n as usize, x), 0.0),
            StatePreset::Cat {
                alpha_re,
                alpha_im,
                parity,
            } => {
                let a = Complex64::new(*alpha_re, *alpha_im);
                coherent_amplitude(a, x) + *parity as f64 * coherent_amplitude(-a, x)
            }
            StatePreset::Superposition { terms } => terms
                .iter()
                .map(|t| t.weight() * t.state.normalized_amplitude_at(x))
                .sum(),
        }
    }

    /// Closed-form amplitude divided by the analytic norm of the preset.
    fn normalized_amplitude_at(&self, x: f64) -> Complex64 {
        match self {
            StatePreset::Cat {
                alpha_re,
                alpha_im,
                parity,
            } => {
                let overlap = (-2.0 * (alpha_re * alpha_re + alpha_im * alpha_im)).exp();
                let n = 2.0 * (1.0 + *parity as f64 * overlap);
                self.amplitude_at(x) / n.sqrt()
            }
            // Nested superpositions are normalized numerically by the caller.
            _ => self.amplitude_at(x),
        }
    }
}

/// `pi^{-1/4} exp(-x^2/2 + sqrt2 alpha x - alpha^2/2 - |alpha|^2/2)`,
/// the generating function of the Hermite functions.
fn coherent_amplitude(alpha: Complex64, x: f64) -> Complex64 {
    let exponent = -0.5 * x * x + SQRT_2 * alpha * x - 0.5 * alpha * alpha - 0.5 * alpha.norm_sqr();
    PI.powf(-0.25) * exponent.exp()
}

/// Normalized Hermite function `h_n(x)` by the two-term recursion
/// `h_{k+1} = sqrt(2/(k+1)) x h_k - sqrt(k/(k+1)) h_{k-1}`.
pub(crate) fn hermite_function(n: usize, x: f64) -> f64 {
    let h0 = PI.powf(-0.25) * (-0.5 * x * x).exp();
    if n == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut cur = SQRT_2 * x * h0;
    for k in 1..n {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * cur - (kf / (kf + 1.0)).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Samples `preset` on `grid` at representation angle 0.
pub fn make_state(preset: &StatePreset, grid: &GridSpec) -> Result<QuadratureWaveFunction> {
    grid.require_symmetric()?;
    let problems = preset.violations();
    if !problems.is_empty() {
        return Err(Error::InvalidPreset(problems.join("; ")));
    }
    let amplitudes: Vec<Complex64> = grid.points().iter().map(|&x| preset.amplitude_at(x)).collect();
    let wf = QuadratureWaveFunction::unnormalized(*grid, 0.0, amplitudes)?;
    let wf = match wf.renormalize() {
        Ok(wf) => wf,
        Err(Error::ZeroNorm) => {
            return Err(Error::InvalidPreset(
                "preset amplitudes cancel to a zero-norm state".into(),
            ))
        }
        Err(e) => return Err(e),
    };
    wf.check_fits()?;
    Ok(wf)
}

/// The state whose representation at `angle` has the preset's closed form.
/// A squeezed preset made this way is squeezed in the quadrature `X(angle)`.
pub fn make_state_at(preset: &StatePreset, grid: &GridSpec, angle: f64) -> Result<QuadratureWaveFunction> {
    Ok(make_state(preset, grid)?.with_angle(angle))
}

/// Mean of `X(0)` for a coherent amplitude: `sqrt2 Re(alpha)`.
pub fn coherent_mean(alpha: Complex64) -> f64 {
    alpha.re / FRAC_1_SQRT_2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    #[test]
    fn vacuum_is_ground_state_gaussian() {
        let g = GridSpec::symmetric(8.0, 512).unwrap();
        let wf = make_state(&StatePreset::Vacuum, &g).unwrap();
        for (k, a) in wf.amplitudes().iter().enumerate() {
            let x = g.point(k);
            let exact = PI.powf(-0.25) * (-0.5 * x * x).exp();
            assert!((a.re - exact).abs() < 1e-12 && a.im.abs() < 1e-15);
        }
        assert!((wf.norm() - 1.0).abs() < 1e-12);
        assert!(wf.mean().abs() < 1e-14);
        assert!((wf.variance() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn squeezed_vacuum_variance() {
        let wf = make_state(&StatePreset::squeezed(1.0), &grid()).unwrap();
        assert!((wf.variance() - (-2.0f64).exp() / 2.0).abs() < 1e-10);
        assert!((wf.variance() - 0.067_667_641_6).abs() < 1e-9);
        // |psi|^2 = e^r/sqrt(pi) exp(-e^{2r} x^2)
        let x = grid().point(530);
        let expected = 1f64.exp() / PI.sqrt() * (-(2f64).exp() * x * x).exp();
        assert!((wf.density()[530] - expected).abs() < 1e-12);
    }

    #[test]
    fn squeezed_variance_over_range() {
        for &r in &[-2.0, -1.0, 0.0, 0.5, 1.5, 3.0] {
            let g = GridSpec::symmetric(64.0, 4096).unwrap();
            let wf = make_state(&StatePreset::squeezed(r), &g).unwrap();
            let expected = (-2.0 * r).exp() / 2.0;
            assert!(
                (wf.variance() - expected).abs() < 1e-6,
                "r = {r}: {} vs {expected}",
                wf.variance()
            );
        }
    }

    #[test]
    fn coherent_mean_and_variance() {
        let wf = make_state(&StatePreset::coherent(Complex64::new(2.0, 0.0)), &grid()).unwrap();
        assert!((wf.mean() - 2.0 * SQRT_2).abs() < 1e-10);
        assert!((wf.variance() - 0.5).abs() < 1e-10);
        assert!((coherent_mean(Complex64::new(2.0, 0.0)) - 2.828_427_124_746_19).abs() < 1e-12);
    }

    #[test]
    fn fock_one_has_node_and_variance() {
        let wf = make_state(&StatePreset::fock(1), &grid()).unwrap();
        assert!(wf.amplitudes()[512].norm() < 1e-15);
        assert!((wf.variance() - 1.5).abs() < 1e-10);
    }

    #[test]
    fn fock_variance_is_n_plus_half() {
        for n in 0..=10u32 {
            let wf = make_state(&StatePreset::fock(n), &grid()).unwrap();
            assert!((wf.variance() - (n as f64 + 0.5)).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn norm_and_renormalize() {
        let wf = make_state(&StatePreset::Vacuum, &grid()).unwrap();
        assert!((norm(&wf) - 1.0).abs() < 1e-12);
        let doubled: Vec<_> = wf.amplitudes().iter().map(|a| a * 2.0).collect();
        let big = QuadratureWaveFunction::unnormalized(grid(), 0.0, doubled).unwrap();
        assert!((big.norm() - 4.0).abs() < 1e-11);
        assert!((renormalize(big).unwrap().norm() - 1.0).abs() < 1e-12);
        let zero = QuadratureWaveFunction::unnormalized(grid(), 0.0, vec![Complex64::default(); 1024])
            .unwrap();
        assert!(matches!(zero.renormalize(), Err(Error::ZeroNorm)));
    }

    #[test]
    fn even_cat_prenormalization_norm() {
        // Fock-expansion oracle: <alpha|-alpha> = e^{-2|alpha|^2}, so
        // || |a> + |-a> ||^2 = 2 (1 + e^{-2|a|^2}).
        let alpha = 0.6;
        let preset = StatePreset::cat(Complex64::new(alpha, 0.0), 1);
        let g = grid();
        let dx = g.dx();
        let raw: f64 = g.points().iter().map(|&x| preset.amplitude_at(x).norm_sqr()).sum::<f64>() * dx;
        // |a> + |-a> = 2 e^{-|a|^2/2} sum_{n even} a^n/sqrt(n!) |n>
        let mut fock_norm = 0.0;
        let mut term = 1.0f64; // |a|^{2n}/n!
        for n in 0..120 {
            if n > 0 {
                term *= alpha * alpha / n as f64;
            }
            if n % 2 == 0 {
                fock_norm += 4.0 * (-alpha * alpha).exp() * term;
            }
        }
        let closed = 2.0 * (1.0 + (-2.0 * alpha * alpha).exp());
        assert!((raw - closed).abs() < 1e-12);
        assert!((fock_norm - closed).abs() < 1e-12);
    }

    #[test]
    fn presets_that_do_not_fit_are_rejected() {
        let small = GridSpec::symmetric(4.0, 256).unwrap();
        let err = make_state(&StatePreset::coherent(Complex64::new(2.0, 0.0)), &small);
        assert!(matches!(err, Err(Error::StateOffGrid(_))));
        let err = make_state(&StatePreset::squeezed(-1.0), &GridSpec::default());
        assert!(matches!(err, Err(Error::StateOffGrid(_))));
    }

    #[test]
    fn invalid_presets() {
        assert!(make_state(&StatePreset::fock(MAX_FOCK_N + 1), &grid()).is_err());
        let bad = StatePreset::cat(Complex64::new(1.0, 0.0), 0);
        assert!(matches!(make_state(&bad, &grid()), Err(Error::InvalidPreset(_))));
        let cancel = StatePreset::Superposition {
            terms: vec![
                SuperpositionTerm { weight_re: 1.0, weight_im: 0.0, state: StatePreset::Vacuum },
                SuperpositionTerm { weight_re: -1.0, weight_im: 0.0, state: StatePreset::Vacuum },
            ],
        };
        assert!(matches!(make_state(&cancel, &grid()), Err(Error::InvalidPreset(_))));
        let asym = GridSpec::new(-10.0, 12.0, 1024).unwrap();
        assert!(matches!(
            make_state(&StatePreset::Vacuum, &asym),
            Err(Error::AsymmetricGrid { .. })
        ));
    }

    #[test]
    fn grid_refinement_is_stable() {
        let coarse = GridSpec::symmetric(10.0, 1024).unwrap();
        let fine = GridSpec::symmetric(10.0, 2048).unwrap();
        for preset in [
            StatePreset::coherent(Complex64::new(1.0, 0.5)),
            StatePreset::squeezed(0.7),
            StatePreset::fock(3),
            StatePreset::cat(Complex64::new(2.0, 0.0), 1),
        ] {
            let a = make_state(&preset, &coarse).unwrap();
            let b = make_state(&preset, &fine).unwrap();
            assert!((a.mean() - b.mean()).abs() < 1e-8);
            assert!((a.variance() - b.variance()).abs() < 1e-8);
        }
    }

    #[test]
    fn preset_parses_from_toml_record() {
        #[derive(Deserialize)]
        struct Doc {
            signal: StatePreset,
        }
        let doc: Doc =
            toml::from_str(r#"signal = { kind = "cat", alpha_re = 2.0, alpha_im = 0.0, parity = 1 }"#)
                .unwrap();
        assert_eq!(doc.signal, StatePreset::cat(Complex64::new(2.0, 0.0), 1));
        let bad: std::result::Result<Doc, _> =
            toml::from_str(r#"signal = { kind = "fock", n = 1, m = 2 }"#);
        assert!(bad.is_err());
    }
}
