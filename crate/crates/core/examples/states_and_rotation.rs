//! Builds the preset states on a grid, rotates them in phase space and
//! checks the grid construction against the Fock-basis expansion.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;
use qndtomo::oracle::{fock_quadrature_wavefunction, fock_state};
use qndtomo::transforms::rotate;
use qndtomo::{make_state, GridSpec, StatePreset};

fn main() -> qndtomo::Result<()> {
    let grid = GridSpec::default();
    let presets = [
        ("vacuum", StatePreset::Vacuum),
        ("coherent 1.5", StatePreset::coherent(Complex64::new(1.5, 0.0))),
        ("squeezed r=0.5", StatePreset::squeezed(0.5)),
        ("fock 3", StatePreset::fock(3)),
        ("even cat 2", StatePreset::cat(Complex64::new(2.0, 0.0), 1)),
    ];

    println!("{:<16} {:>9} {:>9} {:>11} {:>11}", "state", "<X>", "Var X", "Var P", "fock diff");
    for (name, p) in &presets {
        let wf = make_state(p, &grid)?;
        // X(-pi/2) is the momentum quadrature
        let momentum = rotate(&wf, -FRAC_PI_2)?;
        let fock = fock_quadrature_wavefunction(&fock_state(p, 96)?, 0.0, &grid)?;
        let diff = wf
            .amplitudes()
            .iter()
            .zip(fock.amplitudes())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        println!(
            "{name:<16} {:>9.5} {:>9.5} {:>11.5} {:>11.2e}",
            wf.mean(),
            wf.variance(),
            momentum.variance(),
            diff
        );
    }

    let coh = make_state(&StatePreset::coherent(Complex64::new(1.0, 1.0)), &grid)?;
    println!("\ncoherent alpha = 1+i, mean of X(theta):");
    for k in 0..8 {
        let theta = k as f64 * FRAC_PI_2 / 2.0;
        let m = rotate(&coh, theta)?.mean();
        let expected = 2f64.sqrt() * (Complex64::new(1.0, 1.0) * Complex64::from_polar(1.0, theta)).re;
        println!("  theta = {theta:5.3}  {m:+.6}  (expected {expected:+.6})");
    }
    Ok(())
}
