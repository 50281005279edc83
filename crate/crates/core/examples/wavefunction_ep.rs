//! Densities of the two coalescing resonances at an exceptional point and
//! of their averaged eigenvector.
//!
//!     cargo run --release --example wavefunction_ep -- 60 grid.tsv
//!
//! Arguments: `n_max` and an optional output file for the density grid.
//! Each state is scaled to unit c-norm. Near the exceptional point that
//! norm of the averaged vector vanishes much faster than the one of either
//! state, so its scaled density towers above the individual ones while the
//! two individual densities look alike.

use num_complex::Complex64;
use rydberg_ep::basis::BasisSpec;
use rydberg_ep::record::wave_grid_text;
use rydberg_ep::spectral::{DilationParameter, PairSource, ResonanceSolver, SolverConfig};
use rydberg_ep::wavefunction::{averaged_vector, c_norm, c_normalized, density_grid, GridSpec};
use rydberg_ep::FieldPoint;

fn main() -> Result<(), rydberg_ep::Error> {
    let mut args = std::env::args().skip(1);
    let n_max: usize = args.next().map_or(60, |s| s.parse().expect("n_max"));
    let out = args.next();
    let spec = BasisSpec::new(n_max, 0);
    let point = FieldPoint::new(2.387819e-3, 2.739422e-5);
    let dilation = DilationParameter::new(2.6, 0.1)?;
    let solver = ResonanceSolver::new(spec, dilation, SolverConfig::default());
    let pair = solver.seed_pair(point, Complex64::new(-6.85886e-3, -9.42211e-6))?;
    println!("E1 = {:.9e} {:+.9e} i", pair.first.energy.re, pair.first.energy.im);
    println!("E2 = {:.9e} {:+.9e} i", pair.second.energy.re, pair.second.energy.im);

    let avg = averaged_vector(&pair.first.coefficients, &pair.second.coefficients)?;
    let raw = [&pair.first.coefficients, &pair.second.coefficients, &avg];
    let states = raw.iter().map(|v| c_normalized(v, spec)).collect::<Result<Vec<_>, _>>()?;
    let refs: Vec<&[Complex64]> = states.iter().map(|v| v.as_slice()).collect();
    let grid = GridSpec {
        mu_max: 40.0,
        nu_max: 40.0,
        mu_points: 160,
        nu_points: 160,
        phi: 0.0,
    };
    let waves = density_grid(&refs, spec, dilation, &grid)?;
    let labels = ["state1", "state2", "average"];
    for (k, label) in labels.iter().enumerate() {
        println!(
            "{label:8} |c-norm| = {:.3e}  peak = {:.4e}  extent(90%) = {:.3}",
            c_norm(raw[k], spec)?.norm(),
            waves.peak(k),
            waves.extent(k, 0.9)
        );
    }
    println!("peak ratio average/state = {:.1}", waves.peak(2) / waves.peak(0).max(waves.peak(1)));
    if let Some(path) = out {
        let meta = [
            ("gamma", format!("{:e}", point.gamma)),
            ("f", format!("{:e}", point.f)),
            ("n_max", n_max.to_string()),
            ("b_modulus", "2.6".to_string()),
        ];
        std::fs::write(&path, wave_grid_text(&waves, &meta, &labels))?;
        println!("grid written to {path}");
    }
    Ok(())
}
