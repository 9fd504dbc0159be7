//! With a strongly squeezed meter read out orthogonally, the meter density
//! rescaled by the coupling is the signal marginal itself. Sampling it gives
//! a histogram estimate that converges as the shot count grows.

use std::f64::consts::FRAC_PI_2;

use qndtomo::experiments::{delta_limit_reconstruct, exact_delta_marginal, l1_distance, sample_outcomes};
use qndtomo::qnd::{entangle, meter_marginal, CouplingConfig};
use qndtomo::states::make_state_at;
use qndtomo::transforms::rotate_to;
use qndtomo::experiments::MeasurementRecord;
use qndtomo::{make_state, GridSpec, StatePreset};

fn main() -> qndtomo::Result<()> {
    let grid = GridSpec::default();
    let cfg = CouplingConfig::orthogonal(1.0, -FRAC_PI_2)?;
    let signal = make_state(&StatePreset::fock(1), &grid)?;
    let truth = rotate_to(&signal, cfg.signal_angle())?.density();

    println!("exact meter density vs signal marginal:");
    for r in [0.0, 1.0, 2.0, 3.0] {
        let meter = make_state_at(&StatePreset::squeezed(r), &grid, cfg.theta())?;
        let est = exact_delta_marginal(&signal, &meter, &cfg)?;
        println!("  r = {r:.0}: L1 = {:.4}", l1_distance(&est, &truth, grid.dx()));
    }

    let meter = make_state_at(&StatePreset::squeezed(3.0), &grid, cfg.theta())?;
    let w = meter_marginal(&entangle(&signal, &meter, &cfg)?);
    println!("sampled histogram:");
    for shots in [1_000, 10_000, 100_000] {
        let records: Vec<MeasurementRecord> = sample_outcomes(&w, &grid, shots, 9)?
            .into_iter()
            .enumerate()
            .map(|(i, outcome)| MeasurementRecord { phi: cfg.phi(), theta: cfg.theta(), outcome, shot_index: i as u64 })
            .collect();
        let est = delta_limit_reconstruct(&records, &grid, 1.0, Default::default(), &grid)?;
        println!("  {shots:>7} shots: L1 = {:.4}", l1_distance(&est, &truth, grid.dx()));
    }
    Ok(())
}
