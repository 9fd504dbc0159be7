//! Reading the meter in the same quadrature it couples through: the outcome
//! distribution carries no trace of the signal, and every outcome leaves the
//! signal's position density untouched while kicking its momentum.

use num_complex::Complex64;
use qndtomo::qnd::{condition, entangle, meter_marginal, CouplingConfig};
use qndtomo::states::make_state_at;
use qndtomo::transforms::rotate_to;
use qndtomo::wigner::wigner_of;
use qndtomo::{make_state, GridSpec, StatePreset};

fn main() -> qndtomo::Result<()> {
    let grid = GridSpec::default();
    let cfg = CouplingConfig::in_phase(1.0, 0.3)?;
    let signal = make_state(&StatePreset::cat(Complex64::new(1.5, 0.0), 1), &grid)?;
    let meter = make_state_at(&StatePreset::coherent(Complex64::new(0.5, 0.0)), &grid, cfg.theta())?;

    let joint = entangle(&signal, &meter, &cfg)?;
    let w = meter_marginal(&joint);
    let before = meter.density();
    let dev = w.iter().zip(&before).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("max |W(X_m) - |psi_m|^2| = {dev:.2e}");

    let prior = rotate_to(&signal, cfg.signal_angle())?;
    let prior_density = prior.density();
    let prior_wigner = wigner_of(&prior);
    for k in [480, 512, 560, 600] {
        let c = condition(&joint, k)?;
        let shape = c
            .state
            .density()
            .iter()
            .zip(&prior_density)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let wc = wigner_of(&c.state);
        let (_, p_prior) = prior_wigner.argmax();
        let (_, p_post) = wc.argmax();
        println!(
            "outcome {:+.3}: density change {shape:.1e}, momentum peak {p_prior:+.3} -> {p_post:+.3}",
            c.outcome
        );
    }
    Ok(())
}
