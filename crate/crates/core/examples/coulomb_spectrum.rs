//! Field-free hydrogen spectrum from the semiparabolic pencil.
//!
//!     cargo run --release --example coulomb_spectrum -- 60
//!
//! Every level `n` must come out at `-1/(2 n^2)` with `n` states for `m = 0`.

use num_complex::Complex64;
use rydberg_ep::basis::BasisSpec;
use rydberg_ep::linalg::ArnoldiConfig;
use rydberg_ep::spectral::{DilationParameter, ResonanceSolver, SolverConfig};
use rydberg_ep::FieldPoint;

fn main() -> Result<(), rydberg_ep::Error> {
    let n_max: usize = std::env::args().nth(1).map_or(60, |s| s.parse().expect("n_max"));
    let dilation = DilationParameter::new(2.0, 0.0)?;
    println!("# n\texact\tmax deviation\tstates found");
    for n in 1..=8usize {
        let exact = -0.5 / (n * n) as f64;
        let config = SolverConfig {
            count: n + 1,
            arnoldi: ArnoldiConfig {
                block: n + 1,
                ..Default::default()
            },
            ..Default::default()
        };
        let solver = ResonanceSolver::new(BasisSpec::new(n_max, 0), dilation, config);
        // aim slightly off the level so the shifted pencil stays regular
        let res = solver.solve(FieldPoint::default(), Complex64::new(exact * (1.0 + 1e-4), 0.0))?;
        let hits: Vec<_> = res.iter().filter(|r| (r.energy - exact).norm() < 1e-6).collect();
        let worst = hits.iter().map(|r| (r.energy - exact).norm()).fold(0.0, f64::max);
        println!("{n}\t{exact:.12}\t{worst:.3e}\t{}", hits.len());
    }
    Ok(())
}
