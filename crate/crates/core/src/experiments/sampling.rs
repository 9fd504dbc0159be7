use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// How meter outcomes become a density on the meter grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DensityEstimator {
    /// One bin per grid cell, no smoothing.
    #[default]
    Histogram,
    /// Gaussian kernel of the given standard deviation.
    Kde { bandwidth: f64 },
}

/// RNG for one independent stream of a seeded run.
pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Draws `n` grid indices from the discrete distribution `density * dx` by
/// inverse CDF.
pub fn sample_indices<R: Rng>(density: &[f64], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    let mut cdf = Vec::with_capacity(density.len());
    let mut acc = 0.0;
    for &d in density {
        if !(d >= 0.0) || !d.is_finite() {
            return Err(Error::Precondition(format!("density value {d} is not a probability")));
        }
        acc += d;
        cdf.push(acc);
    }
    if !(acc > 0.0) {
        return Err(Error::ZeroNorm);
    }
    let last = density.len() - 1;
    Ok((0..n)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            cdf.partition_point(|&c| c <= u).min(last)
        })
        .collect())
}

/// `n_shots` i.i.d. meter outcomes, each a point of `grid`.
pub fn sample_outcomes(density: &[f64], grid: &GridSpec, n_shots: i64, seed: u64) -> Result<Vec<f64>> {
    if n_shots < 0 {
        return Err(Error::Precondition(format!("n_shots must be non-negative, got {n_shots}")));
    }
    if density.len() != grid.len() {
        return Err(Error::InvalidGrid(format!(
            "density of {} samples for a grid of {}",
            density.len(),
            grid.len()
        )));
    }
    let mut rng = stream_rng(seed, 0);
    Ok(sample_indices(density, n_shots as usize, &mut rng)?
        .into_iter()
        .map(|k| grid.point(k))
        .collect())
}

/// Density on `grid` from outcome indices; integrates to one.
pub fn estimate_density(indices: &[usize], grid: &GridSpec, estimator: DensityEstimator) -> Result<Vec<f64>> {
    if indices.is_empty() {
        return Err(Error::Precondition("no outcomes to estimate a density from".into()));
    }
    let n = grid.len();
    let mut counts = vec![0.0; n];
    for &k in indices {
        counts[k] += 1.0;
    }
    let dx = grid.dx();
    let scale = 1.0 / (indices.len() as f64 * dx);
    match estimator {
        DensityEstimator::Histogram => Ok(counts.into_iter().map(|c| c * scale).collect()),
        DensityEstimator::Kde { bandwidth } => {
            if !(bandwidth > 0.0) || !bandwidth.is_finite() {
                return Err(Error::Precondition(format!("kde bandwidth must be positive, got {bandwidth}")));
            }
            let reach = ((8.0 * bandwidth / dx).ceil() as usize).min(n);
            let kernel: Vec<f64> = (0..=reach)
                .map(|d| (-0.5 * (d as f64 * dx / bandwidth).powi(2)).exp())
                .collect();
            let mut out = vec![0.0; n];
            for (k, &c) in counts.iter().enumerate().filter(|(_, c)| **c > 0.0) {
                let lo = k.saturating_sub(reach);
                let hi = (k + reach).min(n - 1);
                for (j, o) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
                    *o += c * kernel[k.abs_diff(j)];
                }
            }
            let mass: f64 = out.iter().sum::<f64>() * dx;
            Ok(out.into_iter().map(|v| v / mass).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{make_state, StatePreset};

    #[test]
    fn zero_shots_and_negative_shots() {
        let g = GridSpec::default();
        let d = make_state(&StatePreset::Vacuum, &g).unwrap().density();
        assert!(sample_outcomes(&d, &g, 0, 1).unwrap().is_empty());
        assert!(sample_outcomes(&d, &g, -1, 1).is_err());
    }

    #[test]
    fn point_mass_always_hits_its_point() {
        let g = GridSpec::default();
        let mut d = vec![0.0; g.len()];
        d[700] = 1.0 / g.dx();
        let out = sample_outcomes(&d, &g, 500, 9).unwrap();
        assert!(out.iter().all(|&x| x == g.point(700)));
    }

    #[test]
    fn vacuum_moments_within_clt_bounds() {
        let g = GridSpec::default();
        let d = make_state(&StatePreset::Vacuum, &g).unwrap().density();
        let n = 100_000;
        let out = sample_outcomes(&d, &g, n, 2024).unwrap();
        let mean = out.iter().sum::<f64>() / n as f64;
        let var = out.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!(mean.abs() < 4.0 * (0.5f64 / n as f64).sqrt(), "{mean}");
        assert!((var - 0.5).abs() < 0.025, "{var}");
    }

    #[test]
    fn seeded_streams_are_reproducible_and_distinct() {
        let g = GridSpec::default();
        let d = make_state(&StatePreset::Vacuum, &g).unwrap().density();
        assert_eq!(sample_outcomes(&d, &g, 100, 5).unwrap(), sample_outcomes(&d, &g, 100, 5).unwrap());
        let a = sample_indices(&d, 100, &mut stream_rng(5, 0)).unwrap();
        let b = sample_indices(&d, 100, &mut stream_rng(5, 1)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn estimators_integrate_to_one() {
        let g = GridSpec::default();
        let d = make_state(&StatePreset::fock(1), &g).unwrap().density();
        let idx = sample_indices(&d, 5000, &mut stream_rng(3, 0)).unwrap();
        for est in [DensityEstimator::Histogram, DensityEstimator::Kde { bandwidth: 0.1 }] {
            let e = estimate_density(&idx, &g, est).unwrap();
            assert!((e.iter().sum::<f64>() * g.dx() - 1.0).abs() < 1e-12);
            assert!(e.iter().all(|&v| v >= 0.0));
        }
        assert!(estimate_density(&[], &g, DensityEstimator::Histogram).is_err());
    }
}
