//! A broad meter and a small coupling: the mean meter reading moves by the
//! coupling times the signal mean while the signal is nearly undisturbed.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use qndtomo::experiments::{run_weak, WeakConfig};
use qndtomo::qnd::CouplingConfig;
use qndtomo::{GridSpec, StatePreset};

fn main() -> qndtomo::Result<()> {
    let cfg = WeakConfig {
        signal: StatePreset::coherent(Complex64::new(1.0, 0.0)),
        meter: StatePreset::squeezed(-2.0),
        coupling: CouplingConfig::new(0.2, -FRAC_PI_2, 0.0)?,
        signal_grid: GridSpec::default(),
        meter_grid: GridSpec::symmetric(64.0, 1024)?,
        shots: 100_000,
        seed: 5,
    };
    let r = run_weak(&cfg)?;
    println!("width ratio       {:.1}", r.width_ratio);
    println!("expected shift    {:+.4}", r.expected_shift);
    println!("estimated shift   {:+.4} +- {:.4}", r.shift_estimate, r.standard_error);
    println!("z                 {:+.2}", r.z_score());
    println!("min fidelity      {:.5} over {} outcomes", r.min_fidelity(), r.fidelities.len());
    Ok(())
}
