//! Measurement protocols built on the QND interaction: homodyne sampling of
//! the meter, weak measurements, the squeezed-meter delta limit and the
//! tomographic phase sweep.
//!
//! Signal presets describe the signal at representation angle 0. Meter
//! presets describe the meter in its readout frame, so a squeezed meter is
//! squeezed in the quadrature that is measured.

mod delta;
mod sampling;
mod tomography;
mod weak;

use serde::{Deserialize, Serialize};

use crate::grid::GridSpec;
use crate::wigner::WignerGrid;

pub use delta::{delta_limit_reconstruct, exact_delta_marginal, is_orthogonal_readout, rescale_meter_density};
pub(crate) use sampling::stream_rng;
pub use sampling::{estimate_density, sample_indices, sample_outcomes, DensityEstimator};
pub use tomography::{
    check_coverage, radon_residuals, reconstruct_wigner, sweep_phases, FbpOptions, SweepConfig,
    DEFAULT_CUTOFF_FRACTION, MIN_PHASES,
};
pub use weak::{run_weak, WeakConfig, WeakReport, MIN_WIDTH_RATIO};

/// One homodyne detection of the meter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub phi: f64,
    pub theta: f64,
    /// A meter grid point.
    pub outcome: f64,
    pub shot_index: u64,
}

/// Estimated density of `X_s(phi + pi/2)` for one interaction phase.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseMarginal {
    pub phi: f64,
    pub density: Vec<f64>,
    /// Zero when the exact meter density was used.
    pub shots: usize,
    pub estimator: DensityEstimator,
    /// Exact `|psi_s(X; phi + pi/2)|^2`, when the signal is known.
    pub exact: Option<Vec<f64>>,
}

/// Per-phase signal marginals on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalSet {
    pub grid: GridSpec,
    pub entries: Vec<PhaseMarginal>,
}

impl MarginalSet {
    pub fn phases(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.phi).collect()
    }

    pub fn shots(&self) -> usize {
        self.entries.iter().map(|e| e.shots).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult {
    pub wigner: WignerGrid,
    /// L1 distance between each Radon slice of `wigner` and the exact
    /// marginal at that phase, when exact marginals are known.
    pub residuals: Option<Vec<f64>>,
    pub shots_used: usize,
}

/// `sum |a - b| dx`.
pub fn l1_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}
