//! Exceptional point of hydrogen in parallel fields, seeded from the avoided
//! crossing on the ray `gamma/f = 80`.
//!
//!     cargo run --release --example find_ep_hydrogen -- 90
//!
//! Prints each iteration as it finishes, then the converged point.

use num_complex::Complex64;
use rydberg_ep::basis::BasisSpec;
use rydberg_ep::search::{find_ep_observed, hydrogen_solver, SearchOptions};
use rydberg_ep::spectral::{SolverConfig, DEFAULT_ROTATION_ANGLE};
use rydberg_ep::FieldPoint;

fn main() -> Result<(), rydberg_ep::Error> {
    let n_max: usize = std::env::args().nth(1).map_or(90, |s| s.parse().expect("n_max"));
    let seed = FieldPoint::new(1.481e-3, 1.851e-5);
    let guess = Complex64::new(-6.90e-3, 0.0);
    let solver = hydrogen_solver(BasisSpec::new(n_max, 0), seed, DEFAULT_ROTATION_ANGLE, SolverConfig::default())?;
    println!("# it\tgamma0\tf0\th_gamma\t|E1-E2|\tRe E_EP\tIm E_EP\tW\tc-norm");
    let mut k = 0;
    let rec = find_ep_observed(&solver, seed, guess, &SearchOptions::default(), &mut |it| {
        println!(
            "{k}\t{:.10e}\t{:.10e}\t{:.2e}\t{:.3e}\t{:.10e}\t{:.10e}\t{}\t{:.3e}",
            it.center.gamma,
            it.center.f,
            it.h_gamma,
            it.gap,
            it.energy_estimate.re,
            it.energy_estimate.im,
            it.winding.map_or("-".to_string(), |w| w.to_string()),
            it.c_norm
        );
        k += 1;
    })?;
    println!("status   = {}", rec.status.as_str());
    println!("gamma_EP = {:.10e}", rec.position.gamma);
    println!("f_EP     = {:.10e}", rec.position.f);
    println!("E_EP     = {:.10e} {:+.10e} i", rec.energy.re, rec.energy.im);
    println!("winding  = {}", rec.winding);
    Ok(())
}
