//! Tomography of a cat state without touching it: sweep the coupling phase,
//! infer each signal marginal from the meter and back-project.

use num_complex::Complex64;
use qndtomo::experiments::{reconstruct_wigner, sweep_phases, DensityEstimator, FbpOptions, SweepConfig};
use qndtomo::wigner::wigner_on;
use qndtomo::{make_state, GridSpec, StatePreset};

fn main() -> qndtomo::Result<()> {
    let grid = GridSpec::default();
    let signal = StatePreset::cat(Complex64::new(2.0, 0.0), 1);
    let opts = FbpOptions::for_grid(&grid);
    let truth = wigner_on(&make_state(&signal, &grid)?, &opts.x_grid, &opts.p_grid)?;

    let kde = DensityEstimator::Kde { bandwidth: 0.1 };
    for (phases, shots, estimator) in [
        (16, 0, DensityEstimator::Histogram),
        (32, 0, DensityEstimator::Histogram),
        (32, 20_000, DensityEstimator::Histogram),
        (32, 20_000, kde),
    ] {
        let cfg = SweepConfig {
            signal: signal.clone(),
            meter: StatePreset::squeezed(3.0),
            kappa: 1.0,
            phases: (0..phases).map(|k| k as f64 * std::f64::consts::PI / phases as f64).collect(),
            shots,
            seed: 2,
            signal_grid: grid,
            meter_grid: grid,
            estimator,
        };
        let (set, _) = sweep_phases(&cfg)?;
        let rec = reconstruct_wigner(&set, &opts)?;
        let worst = rec.residuals.as_deref().unwrap_or_default().iter().cloned().fold(0.0, f64::max);
        println!(
            "{phases} phases, {shots:>6} shots/phase, {estimator:?}:\n    min W {:+.4} (true {:+.4}), max error {:.4}, worst Radon residual {worst:.4}",
            rec.wigner.min(),
            truth.min(),
            rec.wigner.max_abs_diff(&truth)?
        );
    }
    Ok(())
}
