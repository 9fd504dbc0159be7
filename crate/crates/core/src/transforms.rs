//! Changes of quadrature representation and band-limited translation.
//!
//! A rotation by `delta` maps `psi(X; theta)` to `psi(X; theta + delta)`,
//! i.e. applies `exp(i delta n)`. Angles are reduced into `[-pi/2, pi/2]`
//! with exact parity flips (`exp(i pi n)` is `psi(X) -> psi(-X)`), and the
//! remainder is applied as chirp / free-propagation / chirp on a grid padded
//! by a factor of two. Each factor is diagonal either in `X` or in its
//! Fourier conjugate, so the result is exact up to band-limit and
//! wraparound error.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::states::QuadratureWaveFunction;

/// Angles closer than this to a multiple of `pi/2` take the exact path.
const ANGLE_SNAP: f64 = 1e-12;
/// Probability allowed to wrap around the periodic box during a shift.
pub const MAX_WRAPPED_MASS: f64 = 1e-16;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward and inverse plans of one length; the inverse is unnormalized.
#[derive(Clone)]
pub(crate) struct FftPair {
    pub forward: Arc<dyn Fft<f64>>,
    pub inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        PLANNER.with(|p| {
            let mut p = p.borrow_mut();
            FftPair {
                forward: p.plan_fft_forward(n),
                inverse: p.plan_fft_inverse(n),
            }
        })
    }
}

/// Fourier-phase translator for rows that all live on one grid.
pub(crate) struct Shifter {
    fft: FftPair,
    wavenumbers: Vec<f64>,
}

impl Shifter {
    pub fn new(grid: &GridSpec) -> Self {
        Shifter {
            fft: FftPair::new(grid.len()),
            wavenumbers: GridSpec::fft_wavenumbers(grid.len(), grid.dx()),
        }
    }

    /// `buf(X) <- buf(X - s)`, periodic on the box.
    pub fn shift(&self, buf: &mut [Complex64], s: f64) {
        if s == 0.0 {
            return;
        }
        let n = buf.len() as f64;
        self.fft.forward.process(buf);
        for (b, &k) in buf.iter_mut().zip(&self.wavenumbers) {
            *b *= Complex64::from_polar(1.0 / n, -k * s);
        }
        self.fft.inverse.process(buf);
    }
}

/// Probability of `density` that a translation by `s` would carry past the
/// edges of the periodic box.
pub fn wrapped_mass(density: &[f64], grid: &GridSpec, s: f64) -> f64 {
    let (lo, hi) = (grid.x_min(), grid.x_max());
    density
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let x = grid.point(*k) + s;
            x < lo || x >= hi
        })
        .map(|(_, d)| d)
        .sum::<f64>()
        * grid.dx()
}

/// `psi(X) -> psi(X - s)` by exact band-limited translation.
pub fn shift(wf: &QuadratureWaveFunction, s: f64) -> Result<QuadratureWaveFunction> {
    let grid = *wf.grid();
    let lost = wrapped_mass(&wf.density(), &grid, s);
    if lost > MAX_WRAPPED_MASS {
        return Err(Error::StateOffGrid(format!(
            "shift by {s} pushes probability {lost:.3e} past the grid edge"
        )));
    }
    let mut buf = wf.amplitudes().to_vec();
    Shifter::new(&grid).shift(&mut buf, s);
    let out = QuadratureWaveFunction::unnormalized(grid, wf.angle(), buf)?;
    out.check_fits()?;
    Ok(out)
}

/// `psi(X) -> psi(-X)` with periodic indexing, an exact permutation.
fn parity(amps: &mut [Complex64]) {
    let n = amps.len();
    amps[1..].reverse();
    debug_assert!(n > 1);
}

fn reduce_angle(a: f64) -> f64 {
    let r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r - 2.0 * PI
    } else {
        r
    }
}

/// Applies `exp(-i beta n)` to grid amplitudes.
fn apply_number_phase(amps: &mut [Complex64], grid: &GridSpec, beta: f64) {
    let mut beta = reduce_angle(beta);
    if (beta.abs() - PI).abs() < ANGLE_SNAP {
        parity(amps);
        return;
    }
    if beta.abs() > PI / 2.0 {
        parity(amps);
        beta -= PI * beta.signum();
    }
    if beta.abs() < ANGLE_SNAP {
        return;
    }

    let n = grid.len();
    let m = 2 * n;
    let dx = grid.dx();
    let offset = n / 2;
    let x0 = grid.x_min() - offset as f64 * dx;

    // exp(-i beta H) = K D K with K = exp(-i t X^2/2), D = exp(-i s P^2/2),
    // t = tan(beta/2), s = sin(beta), and exp(-i beta n) = e^{i beta/2} exp(-i beta H).
    let t = (beta / 2.0).tan();
    let s = beta.sin();
    let chirp: Vec<Complex64> = (0..m)
        .map(|k| {
            let x = x0 + k as f64 * dx;
            Complex64::from_polar(1.0, -0.5 * t * x * x)
        })
        .collect();

    let mut buf = vec![Complex64::default(); m];
    buf[offset..offset + n].copy_from_slice(amps);
    for (b, c) in buf.iter_mut().zip(&chirp) {
        *b *= c;
    }
    let fft = FftPair::new(m);
    fft.forward.process(&mut buf);
    let scale = 1.0 / m as f64;
    for (b, k) in buf.iter_mut().zip(GridSpec::fft_wavenumbers(m, dx)) {
        *b *= Complex64::from_polar(scale, -0.5 * s * k * k);
    }
    fft.inverse.process(&mut buf);
    let global = Complex64::from_polar(1.0, 0.5 * beta);
    for (k, a) in amps.iter_mut().enumerate() {
        *a = buf[offset + k] * chirp[offset + k] * global;
    }
}

/// Re-expresses `wf` at representation angle `wf.angle() + delta_theta`.
pub fn rotate(wf: &QuadratureWaveFunction, delta_theta: f64) -> Result<QuadratureWaveFunction> {
    let grid = *wf.grid();
    grid.require_symmetric()?;
    let mut amps = wf.amplitudes().to_vec();
    apply_number_phase(&mut amps, &grid, -delta_theta);
    Ok(QuadratureWaveFunction::unnormalized(grid, wf.angle(), amps)?
        .with_angle(wf.angle() + delta_theta))
}

/// Rotates `wf` so that it is expressed at absolute angle `angle`.
pub fn rotate_to(wf: &QuadratureWaveFunction, angle: f64) -> Result<QuadratureWaveFunction> {
    let out = rotate(wf, angle - wf.angle())?;
    Ok(out.with_angle(angle))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_state, StatePreset};
    use proptest::prelude::*;
    use std::f64::consts::SQRT_2;

    fn grid() -> GridSpec {
        GridSpec::default()
    }

    fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_rotation_is_identity() {
        let wf = make_state(&StatePreset::coherent(Complex64::new(1.0, 0.3)), &grid()).unwrap();
        let r = rotate(&wf, 0.0).unwrap();
        assert_eq!(r.amplitudes(), wf.amplitudes());
    }

    #[test]
    fn fock_states_pick_up_phase_only() {
        for n in [0u32, 1, 2, 5] {
            let wf = make_state(&StatePreset::fock(n), &grid()).unwrap();
            for &d in &[0.3, PI / 2.0, 2.0, -1.1, PI] {
                let r = rotate(&wf, d).unwrap();
                let phase = Complex64::from_polar(1.0, n as f64 * d);
                let expected: Vec<_> = wf.amplitudes().iter().map(|a| a * phase).collect();
                assert!(
                    max_diff(r.amplitudes(), &expected) < 1e-10,
                    "n={n} d={d}: {}",
                    max_diff(r.amplitudes(), &expected)
                );
            }
        }
    }

    #[test]
    fn coherent_quarter_turn_moves_mean() {
        // <X(theta)> = sqrt2 Re(alpha e^{i theta}) under e^{i n theta} phases.
        let wf = make_state(&StatePreset::coherent(Complex64::new(2.0, 0.0)), &grid()).unwrap();
        let q = rotate(&wf, PI / 2.0).unwrap();
        assert!(q.mean().abs() < 1e-10);
        let back = rotate(&q, -PI / 2.0).unwrap();
        assert!((back.mean() - 2.0 * SQRT_2).abs() < 1e-10);
        let tilted = rotate(&wf, PI / 3.0).unwrap();
        assert!((tilted.mean() - 2.0 * SQRT_2 * (PI / 3.0).cos()).abs() < 1e-10);
        let imag = make_state(&StatePreset::coherent(Complex64::new(0.0, 2.0)), &grid()).unwrap();
        let q = rotate(&imag, PI / 2.0).unwrap();
        assert!((q.mean() + 2.0 * SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn half_turn_is_parity() {
        let wf = make_state(&StatePreset::coherent(Complex64::new(1.5, -0.4)), &grid()).unwrap();
        let r = rotate(&wf, PI).unwrap();
        let n = wf.amplitudes().len();
        for k in 1..n {
            assert!((r.amplitudes()[k] - wf.amplitudes()[n - k]).norm() < 1e-12);
        }
        let r2 = rotate(&wf, PI - 1e-3).unwrap();
        let r3 = rotate(&rotate(&wf, PI / 2.0).unwrap(), PI / 2.0).unwrap();
        assert!(max_diff(r3.amplitudes(), r.amplitudes()) < 1e-8);
        assert!((r2.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn asymmetric_grid_rejected() {
        let g = GridSpec::new(-10.0, 12.0, 1024).unwrap();
        let wf = QuadratureWaveFunction::new(
            g,
            0.0,
            g.points().iter().map(|x| Complex64::new((-x * x).exp(), 0.0)).collect(),
        )
        .unwrap();
        assert!(matches!(rotate(&wf, 0.4), Err(Error::AsymmetricGrid { .. })));
    }

    #[test]
    fn shift_translates_vacuum() {
        let wf = make_state(&StatePreset::Vacuum, &grid()).unwrap();
        assert_eq!(shift(&wf, 0.0).unwrap().amplitudes(), wf.amplitudes());
        let s = shift(&wf, 1.5).unwrap();
        assert!((s.mean() - 1.5).abs() < 1e-12);
        assert!((s.variance() - 0.5).abs() < 1e-12);
        assert!((s.norm() - 1.0).abs() < 1e-10);
        for (k, a) in s.amplitudes().iter().enumerate() {
            let x = grid().point(k) - 1.5;
            assert!((a.re - PI.powf(-0.25) * (-0.5 * x * x).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_off_grid_is_an_error() {
        let wf = make_state(&StatePreset::Vacuum, &grid()).unwrap();
        assert!(matches!(shift(&wf, 9.0), Err(Error::StateOffGrid(_))));
    }

    fn random_state(coeffs: &[(f64, f64)]) -> QuadratureWaveFunction {
        let terms = coeffs
            .iter()
            .enumerate()
            .map(|(n, &(re, im))| crate::states::SuperpositionTerm {
                weight_re: re,
                weight_im: im,
                state: StatePreset::fock(n as u32),
            })
            .collect();
        make_state(&StatePreset::Superposition { terms }, &grid()).unwrap()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn rotation_is_unitary_and_invertible(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..8),
            theta in -7.0f64..7.0,
            other in -3.0f64..3.0,
        ) {
            prop_assume!(coeffs.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 0.05);
            let wf = random_state(&coeffs);
            let r = rotate(&wf, theta).unwrap();
            prop_assert!((r.norm() - 1.0).abs() < 1e-9);
            let back = rotate(&r, -theta).unwrap();
            prop_assert!(max_diff(back.amplitudes(), wf.amplitudes()) < 1e-8);
            let composed = rotate(&rotate(&wf, theta).unwrap(), other).unwrap();
            let direct = rotate(&wf, theta + other).unwrap();
            prop_assert!(max_diff(composed.amplitudes(), direct.amplitudes()) < 1e-8);
        }

        #[test]
        fn shift_preserves_norm(
            coeffs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1..6),
            s in -2.0f64..2.0,
        ) {
            prop_assume!(coeffs.iter().map(|(a, b)| a * a + b * b).sum::<f64>() > 0.05);
            let wf = random_state(&coeffs);
            let shifted = shift(&wf, s).unwrap();
            prop_assert!((shifted.norm() - 1.0).abs() < 1e-10);
            prop_assert!((shifted.mean() - wf.mean() - s).abs() < 1e-9);
        }
    }
}
