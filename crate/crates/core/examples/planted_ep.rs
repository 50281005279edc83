//! The full search on a two-level model with a known exceptional point.
//!
//!     cargo run --release --example planted_ep -- 7
//!
//! The argument seeds the random model. No basis solver is involved, so
//! this runs in milliseconds and shows the iteration at machine precision.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rydberg_ep::search::{find_ep_with, SearchOptions};
use rydberg_ep::synthetic::PlantedModel;
use rydberg_ep::FieldPoint;

fn main() -> Result<(), rydberg_ep::Error> {
    let seed: u64 = std::env::args().nth(1).map_or(7, |s| s.parse().expect("seed"));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ep = FieldPoint::new(8.6e-4, 2.0e-5);
    let model = PlantedModel::random(&mut rng, ep, (2e-4, 4e-7), 0.3);
    let start = FieldPoint::new(1.2e-3, 1.9e-5);
    let options = SearchOptions {
        initial_h: Some((6e-5, 1e-7)),
        ..SearchOptions::default()
    };
    let rec = find_ep_with(&model, start, Complex64::new(-0.5, 0.0), &options)?;
    println!("# it\tgamma0\tf0\t|E1-E2|\tepsilon\tW");
    for (k, it) in rec.iterations.iter().enumerate() {
        println!(
            "{k}\t{:.12e}\t{:.12e}\t{:.3e}\t{:.3}\t{}",
            it.center.gamma,
            it.center.f,
            it.gap,
            it.epsilon,
            it.winding.map_or("-".into(), |w| w.to_string())
        );
    }
    println!("status      = {}", rec.status.as_str());
    println!("planted     = ({:.12e}, {:.12e})", ep.gamma, ep.f);
    println!("found       = ({:.12e}, {:.12e})", rec.position.gamma, rec.position.f);
    println!("energy      = {:.15} {:+.15} i", rec.energy.re, rec.energy.im);
    println!("planted E   = {:.15} {:+.15} i", model.ep_energy().re, model.ep_energy().im);
    println!("winding     = {}, exchange = {}", rec.winding, rec.exchange);
    Ok(())
}
