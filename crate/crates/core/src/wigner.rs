//! Wigner functions of grid wavefunctions and filters.
//!
//! `W(X, P) = (1/2pi) int dY e^{iPY} psi(X - Y/2) psi*(X + Y/2)`. Writing
//! `Y = 2y` with `y` on the state grid gives
//! `W(x_j, P) = (dx/pi) sum_m e^{2iP m dx} psi_{j-m} psi*_{j+m}`, which needs
//! only grid samples. On the momentum grid `p_q = (q - N/2) dP`,
//! `dP = pi / (N dx)`, the sum is one FFT per row and the position marginal
//! and total mass are exact.

use std::f64::consts::{FRAC_PI_2, PI};

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::qnd::{self, CouplingConfig, FilterFunction};
use crate::states::QuadratureWaveFunction;
use crate::transforms::{rotate_to, FftPair};

const ANGLE_SNAP: f64 = 1e-12;

/// `W(X, P)` sampled on `x_grid` (rows) times `p_grid` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct WignerGrid {
    pub x_grid: GridSpec,
    pub p_grid: GridSpec,
    pub values: Array2<f64>,
    /// Largest imaginary part discarded while forming `values`.
    pub imaginary_residue: f64,
}

impl WignerGrid {
    pub fn new(x_grid: GridSpec, p_grid: GridSpec, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (x_grid.len(), p_grid.len()) {
            return Err(Error::InvalidGrid(format!(
                "wigner values of shape {:?} for grids {} x {}",
                values.dim(),
                x_grid.len(),
                p_grid.len()
            )));
        }
        Ok(Self {
            x_grid,
            p_grid,
            values,
            imaginary_residue: 0.0,
        })
    }

    pub fn cell_area(&self) -> f64 {
        self.x_grid.dx() * self.p_grid.dx()
    }

    /// `sum W dX dP`.
    pub fn total(&self) -> f64 {
        self.values.sum() * self.cell_area()
    }

    /// `2 pi sum W^2 dX dP`, equal to one for pure states.
    pub fn purity(&self) -> f64 {
        2.0 * PI * self.values.iter().map(|w| w * w).sum::<f64>() * self.cell_area()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// `(x, p)` of the largest value.
    pub fn argmax(&self) -> (f64, f64) {
        let mut best = (0, 0);
        let mut v = f64::NEG_INFINITY;
        for ((i, j), &w) in self.values.indexed_iter() {
            if w > v {
                v = w;
                best = (i, j);
            }
        }
        (self.x_grid.point(best.0), self.p_grid.point(best.1))
    }

    /// `int W dP` at each `x` node.
    pub fn position_marginal(&self) -> Vec<f64> {
        let dp = self.p_grid.dx();
        self.values.sum_axis(Axis(1)).iter().map(|s| s * dp).collect()
    }

    /// `int W dX` at each `p` node.
    pub fn momentum_marginal(&self) -> Vec<f64> {
        let dx = self.x_grid.dx();
        self.values.sum_axis(Axis(0)).iter().map(|s| s * dx).collect()
    }

    /// Catmull-Rom (cubic convolution) interpolation; nodes beyond the grid
    /// count as zero.
    pub fn value_at(&self, x: f64, p: f64) -> f64 {
        let fx = (x - self.x_grid.x_min()) / self.x_grid.dx();
        let fp = (p - self.p_grid.x_min()) / self.p_grid.dx();
        let (nx, np) = self.values.dim();
        if !(fx > -1.0 && fp > -1.0) || fx >= nx as f64 || fp >= np as f64 {
            return 0.0;
        }
        let (i0, j0) = (fx.floor() as i64, fp.floor() as i64);
        let wx = cubic_weights(fx - i0 as f64);
        let wp = cubic_weights(fp - j0 as f64);
        let mut acc = 0.0;
        for (a, wa) in wx.iter().enumerate() {
            let i = i0 - 1 + a as i64;
            if i < 0 || i >= nx as i64 {
                continue;
            }
            for (b, wb) in wp.iter().enumerate() {
                let j = j0 - 1 + b as i64;
                if j < 0 || j >= np as i64 {
                    continue;
                }
                acc += wa * wb * self.values[(i as usize, j as usize)];
            }
        }
        acc
    }

    /// `max |self - other|`; the grids must match.
    pub fn max_abs_diff(&self, other: &WignerGrid) -> Result<f64> {
        if self.x_grid != other.x_grid || self.p_grid != other.p_grid {
            return Err(Error::Precondition("wigner grids differ".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

/// Catmull-Rom weights for the nodes at offsets -1, 0, 1, 2.
fn cubic_weights(t: f64) -> [f64; 4] {
    let (t2, t3) = (t * t, t * t * t);
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

/// Momentum grid conjugate to a state grid: `N` points spaced `pi / (N dx)`.
pub fn conjugate_momentum_grid(x_grid: &GridSpec) -> GridSpec {
    let n = x_grid.len();
    let dp = PI / (n as f64 * x_grid.dx());
    GridSpec::new(-(n as f64 / 2.0) * dp, (n as f64 / 2.0) * dp, n)
        .expect("conjugate grid of a valid grid is valid")
}

/// Correlation `psi_{j-m} psi*_{j+m}`, zero when either index leaves the grid.
fn correlation(amps: &[Complex64], j: usize, m: i64) -> Complex64 {
    let n = amps.len() as i64;
    let (k, l) = (j as i64 - m, j as i64 + m);
    if k < 0 || l < 0 || k >= n || l >= n {
        Complex64::default()
    } else {
        amps[k as usize] * amps[l as usize].conj()
    }
}

/// Wigner transform of arbitrary (not necessarily normalized) samples.
pub fn wigner_kernel(amps: &[Complex64], grid: &GridSpec) -> WignerGrid {
    let n = grid.len();
    let half = (n / 2) as i64;
    let scale = grid.dx() / PI;
    let fft = FftPair::new(n);
    let rows: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|j| {
            let mut buf = vec![Complex64::default(); n];
            for m in -half..half {
                let sign = if m.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                buf[m.rem_euclid(n as i64) as usize] = sign * correlation(amps, j, m);
            }
            fft.inverse.process(&mut buf);
            let residue = buf.iter().map(|b| b.im.abs()).fold(0.0, f64::max) * scale;
            (buf.iter().map(|b| b.re * scale).collect(), residue)
        })
        .collect();
    let mut values = Array2::zeros((n, n));
    let mut residue = 0.0f64;
    for (j, (row, r)) in rows.into_iter().enumerate() {
        residue = residue.max(r);
        values.row_mut(j).assign(&ndarray::Array1::from(row));
    }
    WignerGrid {
        x_grid: *grid,
        p_grid: conjugate_momentum_grid(grid),
        values,
        imaginary_residue: residue,
    }
}

/// Wigner function of `wf` in its own representation.
pub fn wigner_of(wf: &QuadratureWaveFunction) -> WignerGrid {
    wigner_kernel(wf.amplitudes(), wf.grid())
}

/// Unnormalized Wigner function of a measurement filter.
pub fn filter_wigner(filter: &FilterFunction) -> WignerGrid {
    wigner_kernel(&filter.values, &filter.grid)
}

/// Direct evaluation at arbitrary momenta. Every point of `x_grid` must be a
/// node of the state grid.
pub fn wigner_on(wf: &QuadratureWaveFunction, x_grid: &GridSpec, p_grid: &GridSpec) -> Result<WignerGrid> {
    let sgrid = wf.grid();
    let rows: Vec<usize> = x_grid
        .points()
        .iter()
        .map(|&x| {
            sgrid.exact_index(x, 1e-6).ok_or_else(|| {
                Error::Precondition(format!("wigner x point {x} is not a node of the state grid"))
            })
        })
        .collect::<Result<_>>()?;
    let amps = wf.amplitudes();
    let n = sgrid.len() as i64;
    let dx = sgrid.dx();
    let ps = p_grid.points();
    let out: Vec<Vec<f64>> = rows
        .par_iter()
        .map(|&j| {
            let g: Vec<Complex64> = (0..n / 2).map(|m| correlation(amps, j, m)).collect();
            ps.iter()
                .map(|&p| {
                    let step = Complex64::from_polar(1.0, 2.0 * p * dx);
                    let mut ph = step;
                    let mut acc = 0.0;
                    for gm in &g[1..] {
                        acc += (gm * ph).re;
                        ph *= step;
                    }
                    (g[0].re + 2.0 * acc) * dx / PI
                })
                .collect()
        })
        .collect();
    let mut values = Array2::zeros((x_grid.len(), p_grid.len()));
    for (i, row) in out.into_iter().enumerate() {
        values.row_mut(i).assign(&ndarray::Array1::from(row));
    }
    WignerGrid::new(*x_grid, *p_grid, values)
}

/// `int dP' a(X, P - P') b(X, P')` on a shared conjugate grid. Exact as a
/// circular convolution because both factors are periodic in `P`.
pub fn convolve_momentum(a: &WignerGrid, b: &WignerGrid) -> Result<WignerGrid> {
    if a.x_grid != b.x_grid || a.p_grid != b.p_grid {
        return Err(Error::Precondition("convolution of wigner functions on different grids".into()));
    }
    let (nx, np) = a.values.dim();
    let dp = a.p_grid.dx();
    let fft = FftPair::new(np);
    let rows: Vec<Vec<f64>> = (0..nx)
        .into_par_iter()
        .map(|j| {
            let mut fa: Vec<Complex64> = a.values.row(j).iter().map(|&v| Complex64::new(v, 0.0)).collect();
            let mut fb: Vec<Complex64> = b.values.row(j).iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft.forward.process(&mut fa);
            fft.forward.process(&mut fb);
            for (x, y) in fa.iter_mut().zip(&fb) {
                *x *= y;
            }
            fft.inverse.process(&mut fa);
            // P - P' indexes as q - q' + N/2 on a grid centred at zero.
            let scale = dp / np as f64;
            (0..np).map(|q| fa[(q + np / 2) % np].re * scale).collect()
        })
        .collect();
    let mut values = Array2::zeros((nx, np));
    for (j, row) in rows.into_iter().enumerate() {
        values.row_mut(j).assign(&ndarray::Array1::from(row));
    }
    WignerGrid::new(a.x_grid, a.p_grid, values)
}

/// Largest deviation between the Wigner function of the filtered signal and
/// the convolution of the prior and filter Wigner functions.
///
/// `signal` is the pre-interaction state; it is rotated to the measured
/// signal angle like in [`qnd::filter_function`].
pub fn convolution_check(
    signal: &QuadratureWaveFunction,
    filter: &FilterFunction,
    cfg: &CouplingConfig,
) -> Result<f64> {
    let rotated = rotate_to(signal, cfg.signal_angle())?;
    let conditioned = qnd::apply_filter(signal, filter, cfg)?;
    let direct = wigner_of(&conditioned);
    let conv = convolve_momentum(&wigner_of(&rotated), &filter_wigner(filter))?;
    direct.max_abs_diff(&conv)
}

/// A quadrature density on an explicit axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub axis: GridSpec,
    pub density: Vec<f64>,
}

fn reduce(angle: f64) -> f64 {
    angle.rem_euclid(2.0 * PI)
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() < ANGLE_SNAP || (a - b - 2.0 * PI).abs() < ANGLE_SNAP || (a - b + 2.0 * PI).abs() < ANGLE_SNAP
}

/// `v[N - k]`, the reflection through the centre of a symmetric grid.
fn reflect(v: &[f64]) -> Vec<f64> {
    let n = v.len();
    (0..n).map(|k| if k == 0 { 0.0 } else { v[n - k] }).collect()
}

/// Density of `X(angle) = cos(angle) X - sin(angle) P` relative to the
/// representation of `w`.
///
/// Multiples of `pi/2` are exact sums over one axis; other angles integrate
/// the cubic interpolant along lines of constant `X(angle)`.
pub fn wigner_marginal(w: &WignerGrid, angle: f64) -> Marginal {
    let a = reduce(angle);
    let symmetric = w.x_grid.is_symmetric() && w.p_grid.is_symmetric();
    if near(a, 0.0) {
        return Marginal { axis: w.x_grid, density: w.position_marginal() };
    }
    if symmetric && near(a, PI) {
        return Marginal { axis: w.x_grid, density: reflect(&w.position_marginal()) };
    }
    if symmetric && near(a, 3.0 * FRAC_PI_2) {
        return Marginal { axis: w.p_grid, density: w.momentum_marginal() };
    }
    if symmetric && near(a, FRAC_PI_2) {
        return Marginal { axis: w.p_grid, density: reflect(&w.momentum_marginal()) };
    }
    let axis = if a.cos().abs() >= a.sin().abs() { w.x_grid } else { w.p_grid };
    let density = wigner_marginal_on(w, angle, &axis);
    Marginal { axis, density }
}

/// Line integrals of the cubic interpolant of `w` at the nodes of `axis`.
pub fn wigner_marginal_on(w: &WignerGrid, angle: f64, axis: &GridSpec) -> Vec<f64> {
    let (c, s) = (angle.cos(), angle.sin());
    let h = 0.5 * w.x_grid.dx().min(w.p_grid.dx());
    let reach = w
        .x_grid
        .x_min()
        .abs()
        .max(w.x_grid.x_max().abs())
        .hypot(w.p_grid.x_min().abs().max(w.p_grid.x_max().abs()));
    let steps = (reach / h).ceil() as i64;
    axis.points()
        .par_iter()
        .map(|&u| {
            // (x, p) = u (c, -s) + v (s, c)
            let mut acc = 0.0;
            for k in -steps..=steps {
                let v = k as f64 * h;
                acc += w.value_at(u * c + v * s, -u * s + v * c);
            }
            acc * h
        })
        .collect()
}
