//! Uniform one-dimensional quadrature grids.
//!
//! Sample `k` sits at `x_min + k * dx` with `dx = (x_max - x_min) / n_points`,
//! so the right edge `x_max` is excluded. On a symmetric grid the origin is
//! the sample at index `n_points / 2`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_POINTS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    n_points: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_min >= x_max {
            return Err(Error::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max})"
            )));
        }
        if n_points < MIN_POINTS || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n_points must be a power of two >= {MIN_POINTS}, got {n_points}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_points,
        })
    }

    /// Grid on `[-half_width, half_width)`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_points as f64
    }

    pub fn point(&self, k: usize) -> f64 {
        self.x_min + k as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.point(k)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        (self.x_min + self.x_max).abs() <= 1e-12 * self.x_max.abs().max(1.0)
    }

    pub fn require_symmetric(&self) -> Result<()> {
        if self.is_symmetric() {
            Ok(())
        } else {
            Err(Error::AsymmetricGrid {
                x_min: self.x_min,
                x_max: self.x_max,
            })
        }
    }

    /// Index of the grid point nearest to `x`, clamped to the grid.
    pub fn nearest_index(&self, x: f64) -> usize {
        let k = ((x - self.x_min) / self.dx()).round();
        k.clamp(0.0, (self.n_points - 1) as f64) as usize
    }

    /// Index `k` with `point(k) == x` up to `tol * dx`, if any.
    pub fn exact_index(&self, x: f64, tol: f64) -> Option<usize> {
        let f = (x - self.x_min) / self.dx();
        let k = f.round();
        if (f - k).abs() <= tol && k >= 0.0 && (k as usize) < self.n_points {
            Some(k as usize)
        } else {
            None
        }
    }

    /// Angular wavenumbers of the length-`n` DFT of samples spaced `dx`,
    /// in FFT order.
    pub fn fft_wavenumbers(n: usize, dx: f64) -> Vec<f64> {
        let dk = 2.0 * std::f64::consts::PI / (n as f64 * dx);
        (0..n)
            .map(|m| {
                let signed = if m < n / 2 { m as i64 } else { m as i64 - n as i64 };
                signed as f64 * dk
            })
            .collect()
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            x_min: -10.0,
            x_max: 10.0,
            n_points: 1024,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(1.0, -1.0, 128).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 100).is_err());
        assert!(GridSpec::new(-1.0, 1.0, 32).is_err());
        assert!(GridSpec::new(f64::NAN, 1.0, 128).is_err());
    }

    #[test]
    fn symmetric_grid_contains_origin() {
        let g = GridSpec::symmetric(8.0, 512).unwrap();
        assert_eq!(g.point(256), 0.0);
        assert!((g.dx() - 16.0 / 512.0).abs() < 1e-15);
        assert!(g.require_symmetric().is_ok());
        assert!(GridSpec::new(-8.0, 9.0, 512).unwrap().require_symmetric().is_err());
    }

    #[test]
    fn index_lookup() {
        let g = GridSpec::symmetric(10.0, 1024).unwrap();
        assert_eq!(g.nearest_index(0.0), 512);
        assert_eq!(g.nearest_index(-100.0), 0);
        assert_eq!(g.exact_index(g.point(77), 1e-9), Some(77));
        assert_eq!(g.exact_index(g.point(77) + 0.3 * g.dx(), 1e-9), None);
    }

    #[test]
    fn wavenumbers_are_signed() {
        let k = GridSpec::fft_wavenumbers(8, 1.0);
        assert_eq!(k[0], 0.0);
        assert!(k[3] > 0.0 && k[4] < 0.0 && k[7] < 0.0);
    }
}
