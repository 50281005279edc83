//! Reduced units against laboratory units for hydrogen and Cu2O.
//!
//!     cargo run --example units_convert
//!
//! The same reduced field strength means hundreds of tesla for hydrogen and
//! about two tesla for the exciton.

use num_complex::Complex64;
use rydberg_ep::units::{material_constants, reduced_to_si, si_to_reduced, Material};
use rydberg_ep::FieldPoint;

fn main() {
    for material in [Material::Hydrogen, Material::CuprousOxide] {
        let u = material_constants(material);
        println!("[{}]", material.name());
        println!("  energy unit    = {:e} J ({:.6e} eV)", u.energy_unit, u.energy_unit_ev());
        println!("  length unit    = {:e} m", u.length_unit);
        println!("  electric unit  = {:e} V/m", u.electric_unit);
        println!("  magnetic unit  = {:e} T", u.magnetic_unit);
        println!("  band gap shift = {} eV", u.band_gap_offset);

        let top = reduced_to_si(material, FieldPoint::new(3e-3, 0.0), Complex64::new(0.0, 0.0));
        println!("  gamma = 3e-3          -> B = {:.4} T", top.tesla);

        // the exceptional point reached from the ratio-80 avoided crossing
        let ep = FieldPoint::new(8.598633574e-4, 2.005076385e-5);
        let si = reduced_to_si(material, ep, Complex64::new(-7.647637585e-3, -8.46181432e-7));
        println!(
            "  EP                    -> B = {:.4} T, F = {:.4} V/cm, E = {:.6} {:+.3e} i eV",
            si.tesla, si.volts_per_cm, si.energy_ev.re, si.energy_ev.im
        );
        let back = si_to_reduced(material, si.tesla, si.volts_per_cm);
        println!("  back to reduced       -> gamma = {:.10e}, f = {:.10e}", back.gamma, back.f);
    }
}
