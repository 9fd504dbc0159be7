//! Cross-checks the grid simulation against an independent Fock-basis
//! evolution for a few scenarios.

use num_complex::Complex64;
use qndtomo::oracle::{oracle_compare, Scenario};
use qndtomo::qnd::CouplingConfig;
use qndtomo::{GridSpec, StatePreset};

fn main() -> qndtomo::Result<()> {
    let grid = GridSpec::default();
    let cases = [
        (StatePreset::Vacuum, StatePreset::Vacuum, CouplingConfig::orthogonal(1.0, 0.0)?),
        (StatePreset::coherent(Complex64::new(1.0, 0.5)), StatePreset::squeezed(0.5), CouplingConfig::new(0.7, 0.4, 1.1)?),
        (StatePreset::fock(2), StatePreset::coherent(Complex64::new(0.0, 1.0)), CouplingConfig::in_phase(1.0, 1.0)?),
        (StatePreset::cat(Complex64::new(1.5, 0.0), -1), StatePreset::Vacuum, CouplingConfig::new(0.5, -0.3, 0.9)?),
    ];
    println!("{:<10} {:>12} {:>12} {:>12}", "case", "norm drift", "marginal", "infidelity");
    for (i, (signal, meter, coupling)) in cases.into_iter().enumerate() {
        let report = oracle_compare(&Scenario {
            signal,
            meter,
            coupling,
            signal_grid: grid,
            meter_grid: grid,
            cutoff: 64,
            outcome_index: None,
        })?;
        println!(
            "{:<10} {:>12.2e} {:>12.2e} {:>12.2e}",
            i,
            report.joint_norm_drift,
            report.marginal_max_deviation,
            report.conditioned_infidelity
        );
    }
    Ok(())
}
