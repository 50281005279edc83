//! Material scaling between reduced units and SI units.
//!
//! Both materials share one dimensionless Hamiltonian; the material enters
//! only through the four scaling constants below and, for the exciton, a
//! band-gap offset on the energy axis.

use num_complex::Complex64;

/// Elementary charge in coulombs (exact SI value).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
/// Reduced Planck constant in J s (exact SI value).
pub const HBAR: f64 = 1.054_571_817e-34;
/// Band gap of cuprous oxide in eV, added to exciton energies.
pub const CU2O_BAND_GAP_EV: f64 = 2.17208;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Material {
    Hydrogen,
    CuprousOxide,
}

impl Material {
    pub fn name(self) -> &'static str {
        match self {
            Material::Hydrogen => "hydrogen",
            Material::CuprousOxide => "cu2o",
        }
    }
}

impl std::str::FromStr for Material {
    type Err = crate::Error;

    fn from_str(s: &str) -> crate::Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "h" | "hydrogen" => Ok(Material::Hydrogen),
            "cu2o" | "cuprous-oxide" | "cuprousoxide" => Ok(Material::CuprousOxide),
            other => Err(crate::Error::InvalidInput(format!("unknown material '{other}'"))),
        }
    }
}

/// Scaling constants of one material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitSystem {
    /// Energy unit in joules.
    pub energy_unit: f64,
    /// Length unit in metres.
    pub length_unit: f64,
    /// Electric field unit in V/m.
    pub electric_unit: f64,
    /// Magnetic flux density unit in tesla.
    pub magnetic_unit: f64,
    /// Energy offset in eV applied to the real part of converted energies.
    pub band_gap_offset: f64,
}

impl UnitSystem {
    /// Electric field unit recomputed from energy and length units.
    pub fn derived_electric_unit(&self) -> f64 {
        self.energy_unit / (ELEMENTARY_CHARGE * self.length_unit)
    }

    /// Magnetic unit recomputed from the length unit.
    pub fn derived_magnetic_unit(&self) -> f64 {
        HBAR / (ELEMENTARY_CHARGE * self.length_unit * self.length_unit)
    }

    /// Energy unit expressed in eV.
    pub fn energy_unit_ev(&self) -> f64 {
        self.energy_unit / ELEMENTARY_CHARGE
    }
}

/// A point in the reduced field plane: `gamma = B/B0`, `f = F/F0`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldPoint {
    pub gamma: f64,
    pub f: f64,
}

impl FieldPoint {
    pub const fn new(gamma: f64, f: f64) -> Self {
        Self { gamma, f }
    }

    pub fn offset(self, dgamma: f64, df: f64) -> Self {
        Self::new(self.gamma + dgamma, self.f + df)
    }
}

/// Field strengths and energy in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiValues {
    pub tesla: f64,
    pub volts_per_cm: f64,
    pub energy_ev: Complex64,
}

pub fn material_constants(material: Material) -> UnitSystem {
    match material {
        Material::Hydrogen => UnitSystem {
            energy_unit: 4.359744e-18,
            length_unit: 0.529177e-10,
            electric_unit: 5.142206e11,
            magnetic_unit: 2.350517e5,
            band_gap_offset: 0.0,
        },
        Material::CuprousOxide => UnitSystem {
            energy_unit: 2.945e-20,
            length_unit: 1.044e-9,
            electric_unit: 1.760e8,
            magnetic_unit: 6.034e2,
            band_gap_offset: CU2O_BAND_GAP_EV,
        },
    }
}

/// Converts a reduced energy to eV, optionally adding the band-gap offset.
pub fn energy_to_ev(material: Material, energy: Complex64, with_offset: bool) -> Complex64 {
    let units = material_constants(material);
    let mut e = energy * units.energy_unit_ev();
    if with_offset {
        e.re += units.band_gap_offset;
    }
    e
}

/// Inverse of [`energy_to_ev`].
pub fn energy_from_ev(material: Material, energy_ev: Complex64, with_offset: bool) -> Complex64 {
    let units = material_constants(material);
    let mut e = energy_ev;
    if with_offset {
        e.re -= units.band_gap_offset;
    }
    e / units.energy_unit_ev()
}

pub fn reduced_to_si(material: Material, point: FieldPoint, energy: Complex64) -> SiValues {
    let units = material_constants(material);
    SiValues {
        tesla: point.gamma * units.magnetic_unit,
        // V/m -> V/cm
        volts_per_cm: point.f * units.electric_unit / 100.0,
        energy_ev: energy_to_ev(material, energy, true),
    }
}

pub fn si_to_reduced(material: Material, tesla: f64, volts_per_cm: f64) -> FieldPoint {
    let units = material_constants(material);
    FieldPoint::new(
        tesla / units.magnetic_unit,
        volts_per_cm * 100.0 / units.electric_unit,
    )
}

/// The paramagnetic term only shifts energies by a constant for fixed `m`.
/// Every calculation here uses `m = 0`; any other choice gets a note.
pub fn paramagnetic_note(m: i32) -> Option<String> {
    (m != 0).then(|| {
        format!(
            "m = {m}: the paramagnetic shift (proportional to gamma * m) is not included in the energies"
        )
    })
}
