//! An orthogonal readout: the meter density is the signal marginal blurred
//! by the meter, and the conditioned Wigner function is the prior convolved
//! with the Wigner function of the filter.

use num_complex::Complex64;
use qndtomo::qnd::{apply_filter, entangle, filter_function, meter_marginal, CouplingConfig};
use qndtomo::states::make_state_at;
use qndtomo::transforms::rotate_to;
use qndtomo::wigner::{convolution_check, wigner_of};
use qndtomo::{make_state, GridSpec, StatePreset};

fn main() -> qndtomo::Result<()> {
    let grid = GridSpec::default();
    let cfg = CouplingConfig::orthogonal(1.0, 0.0)?;
    let signal = make_state(&StatePreset::cat(Complex64::new(2.0, 0.0), 1), &grid)?;
    let meter = make_state_at(&StatePreset::Vacuum, &grid, cfg.theta())?;

    let w = meter_marginal(&entangle(&signal, &meter, &cfg)?);
    let marginal = rotate_to(&signal, cfg.signal_angle())?.density();
    let dx = grid.dx();
    let mean = |d: &[f64]| d.iter().enumerate().map(|(k, v)| v * grid.point(k)).sum::<f64>() * dx;
    let var = |d: &[f64]| {
        let m = mean(d);
        d.iter().enumerate().map(|(k, v)| v * (grid.point(k) - m).powi(2)).sum::<f64>() * dx
    };
    println!("signal marginal variance {:.5}", var(&marginal));
    println!("meter outcome variance   {:.5} (signal + 0.5 from the meter)", var(&w));

    for k in [512, 563, 640] {
        let outcome = grid.point(k);
        let f = filter_function(&signal, &meter, outcome, &cfg)?;
        let post = apply_filter(&signal, &f, &cfg)?;
        let wig = wigner_of(&post);
        let err = convolution_check(&signal, &f, &cfg)?;
        println!(
            "outcome {outcome:+.3}: p = {:.4}, Wigner min {:+.4}, convolution mismatch {err:.2e}",
            f.probability_density,
            wig.min()
        );
    }
    Ok(())
}
