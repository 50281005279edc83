//! Resonance spectra of hydrogen-like systems in parallel electric and
//! magnetic fields, computed by complex rotation in a dilated semiparabolic
//! oscillator basis, and localization of exceptional points with a
//! nine-point octagon model.
//!
//! The pipeline, bottom-up:
//!
//! - [`units`]: reduced units and the hydrogen / Cu2O scaling constants.
//! - [`basis`]: radial oscillator matrix elements and the product basis.
//! - [`spectral`]: pencil assembly, shift-invert eigensolver, pair tracking.
//! - [`octagon`]: nine-point stencil, two-level model fit, quartic root
//!   selection by epsilon continuation.
//! - [`search`]: the iteration that recenters the octagon onto the EP.
//! - [`verification`]: winding number and resonance exchange on a loop.
//! - [`scanner`]: spectra along rays of constant `gamma/f`, avoided crossings.
//! - [`wavefunction`]: densities in semiparabolic coordinates.
//! - [`record`], [`cli`]: text formats and the command-line front end.

pub mod basis;
pub mod cli;
mod error;
pub mod linalg;
pub mod octagon;
pub mod record;
pub mod scanner;
pub mod search;
pub mod spectral;
pub mod synthetic;
pub mod units;
pub mod verification;
pub mod wavefunction;

pub use error::{Error, Result};
pub use units::FieldPoint;
