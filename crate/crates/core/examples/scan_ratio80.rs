//! Spectrum along `gamma/f = 80` and the avoided crossings found in it.
//!
//!     cargo run --release --example scan_ratio80 -- 60 26
//!
//! Arguments: `n_max` and the number of scan points. The crossing between
//! the `n = 10` and `n = 8` manifolds near `gamma = 1.48e-3` is the seed of
//! the `find_ep_hydrogen` example.

use rydberg_ep::basis::BasisSpec;
use rydberg_ep::scanner::{detect_avoided_crossings, scan_spectrum, ScanConfig};

fn main() -> Result<(), rydberg_ep::Error> {
    let mut args = std::env::args().skip(1);
    let n_max: usize = args.next().map_or(60, |s| s.parse().expect("n_max"));
    let steps: usize = args.next().map_or(26, |s| s.parse().expect("steps"));
    let mut config = ScanConfig::new(80.0, (1.2e-3, 1.7e-3), steps, BasisSpec::new(n_max, 0), (-7.6e-3, -6.2e-3));
    config.track_count = 14;
    let spectrum = scan_spectrum(&config)?;
    eprintln!(
        "{} tracks, {} track breaks",
        spectrum.tracks().len(),
        spectrum.breaks.len()
    );
    println!("# gamma\tf\ttrack\tRe E\tIm E");
    for p in &spectrum.points {
        println!("{:.6e}\t{:.6e}\t{}\t{:.8e}\t{:.4e}", p.gamma, p.f, p.track, p.energy.re, p.energy.im);
    }
    for c in detect_avoided_crossings(&spectrum) {
        eprintln!(
            "avoided crossing: gamma0 = {:.4e}, f0 = {:.4e}, Re E = {:.4e}, gap = {:.2e}, tracks {:?}",
            c.gamma0, c.f0, c.energy_guess.re, c.gap, c.tracks
        );
    }
    Ok(())
}
