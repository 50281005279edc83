//! Certificates for an exceptional point inside a loop around the stencil:
//! the winding number of `eta` and the exchange of the two resonances
//! reconstructed from the model as `E = (kappa +- sqrt(eta)) / 2`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::octagon::ModelCoefficients;
use crate::spectral::{PairSource, ResonancePair};
use crate::{Error, FieldPoint, Result};

/// Samples on the ellipse `gamma0 + h_gamma cos phi`, `f0 + h_f sin phi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopDiscretization {
    pub n: usize,
    pub center: FieldPoint,
    pub h_gamma: f64,
    pub h_f: f64,
}

pub const DEFAULT_LOOP_POINTS: usize = 512;
const MIN_LOOP_POINTS: usize = 16;
const MAX_DOUBLINGS: usize = 4;

impl LoopDiscretization {
    pub fn new(n: usize, center: FieldPoint, h_gamma: f64, h_f: f64) -> Result<Self> {
        if n < MIN_LOOP_POINTS {
            return Err(Error::InvalidInput(format!("loop needs at least {MIN_LOOP_POINTS} points, got {n}")));
        }
        if !(h_gamma > 0.0 && h_f > 0.0) {
            return Err(Error::InvalidInput("loop half axes must be positive".into()));
        }
        Ok(Self { n, center, h_gamma, h_f })
    }

    /// The ellipse through the stencil of `coeffs`, with `n` samples.
    pub fn around(coeffs: &ModelCoefficients, n: usize) -> Result<Self> {
        Self::new(n, coeffs.center, coeffs.h_gamma, coeffs.h_f)
    }

    pub fn angle(&self, i: usize) -> f64 {
        2.0 * PI * (i % self.n) as f64 / self.n as f64
    }

    pub fn point(&self, i: usize) -> FieldPoint {
        let phi = self.angle(i);
        self.center.offset(self.h_gamma * phi.cos(), self.h_f * phi.sin())
    }

    pub fn doubled(&self) -> Self {
        Self { n: 2 * self.n, ..*self }
    }
}

/// Winding number with the unrounded sum it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Winding {
    pub value: i64,
    pub raw: f64,
    /// Number of samples finally used.
    pub n: usize,
}

fn etas_on(coeffs: &ModelCoefficients, lp: &LoopDiscretization) -> Vec<Complex64> {
    (0..lp.n)
        .map(|i| crate::octagon::eval_model(coeffs, lp.point(i)).1)
        .collect()
}

/// Discretized `(1/2 pi i) oint d eta / eta` with central differences. The
/// sample count is doubled (up to four times) until the sum is within 0.05
/// of an integer.
pub fn winding_number(coeffs: &ModelCoefficients, lp: &LoopDiscretization) -> Result<Winding> {
    let mut lp = *lp;
    let mut last = f64::NAN;
    for _ in 0..=MAX_DOUBLINGS {
        let etas = etas_on(coeffs, &lp);
        let scale = coeffs.eta0.norm().max(etas.iter().map(|z| z.norm()).fold(0.0, f64::max));
        let smallest = etas.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
        if !(smallest > 1e-14 * scale) {
            return Err(Error::ZeroOnLoop(smallest));
        }
        let n = lp.n;
        let sum: Complex64 = (0..n)
            .map(|i| (etas[(i + 1) % n] - etas[(i + n - 1) % n]) / (2.0 * etas[i]))
            .sum();
        let raw = (sum / Complex64::new(0.0, 2.0 * PI)).re;
        if (raw - raw.round()).abs() <= 0.05 {
            return Ok(Winding {
                value: raw.round() as i64,
                raw,
                n,
            });
        }
        last = raw;
        lp = lp.doubled();
    }
    Err(Error::NonIntegerWinding(last))
}

/// The two resonance energies around the loop, `n + 1` samples each; the
/// last sample repeats angle zero after a full turn.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonancePaths {
    pub angles: Vec<f64>,
    pub first: Vec<Complex64>,
    pub second: Vec<Complex64>,
}

impl ResonancePaths {
    /// Largest `|sqrt(eta)|` along the loop, i.e. half the largest gap.
    pub fn max_half_gap(&self) -> f64 {
        self.first
            .iter()
            .zip(&self.second)
            .map(|(a, b)| (a - b).norm() / 2.0)
            .fold(0.0, f64::max)
    }

    /// Distance between start and end for the closed and for the swapped
    /// assignment.
    pub fn endpoint_mismatch(&self) -> (f64, f64) {
        let n = self.first.len() - 1;
        let (a0, b0, a1, b1) = (self.first[0], self.second[0], self.first[n], self.second[n]);
        let closed = (a1 - a0).norm().max((b1 - b0).norm());
        let swapped = (a1 - b0).norm().max((b1 - a0).norm());
        (closed, swapped)
    }
}

/// Model energies `(kappa +- sqrt(eta)) / 2` along the loop, following the
/// square-root branch by continuity.
pub fn resonance_paths(coeffs: &ModelCoefficients, lp: &LoopDiscretization) -> Result<ResonancePaths> {
    let n = lp.n;
    let mut angles = Vec::with_capacity(n + 1);
    let mut first = Vec::with_capacity(n + 1);
    let mut second = Vec::with_capacity(n + 1);
    let mut prev: Option<Complex64> = None;
    for i in 0..=n {
        let (kappa, eta) = crate::octagon::eval_model(coeffs, lp.point(i));
        let mut r = eta.sqrt();
        if let Some(p) = prev {
            let (keep, flip) = ((r - p).norm(), (r + p).norm());
            if (keep - flip).abs() <= 0.01 * keep.max(flip) {
                return Err(Error::BranchAmbiguity(i));
            }
            if flip < keep {
                r = -r;
            }
        }
        prev = Some(r);
        angles.push(if i == n { 2.0 * PI } else { lp.angle(i) });
        first.push((kappa + r) / 2.0);
        second.push((kappa - r) / 2.0);
    }
    Ok(ResonancePaths { angles, first, second })
}

/// True when the two paths end on each other's starting values.
pub fn exchange_detected(paths: &ResonancePaths) -> bool {
    let (closed, swapped) = paths.endpoint_mismatch();
    swapped < closed
}

/// Winding number and exchange on one loop, checked against each other.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub winding: Winding,
    pub exchange: bool,
    pub paths: ResonancePaths,
}

/// Computes both certificates, refining the loop on branch ambiguity. An
/// odd winding number must come with an exchange and an even one without;
/// a disagreement is reported as [`Error::InconsistentCertificate`].
pub fn certify(coeffs: &ModelCoefficients, lp: &LoopDiscretization) -> Result<Certificate> {
    let winding = winding_number(coeffs, lp)?;
    let mut lp = LoopDiscretization { n: winding.n, ..*lp };
    let mut paths = resonance_paths(coeffs, &lp);
    for _ in 0..MAX_DOUBLINGS {
        if !matches!(paths, Err(Error::BranchAmbiguity(_))) {
            break;
        }
        lp = lp.doubled();
        paths = resonance_paths(coeffs, &lp);
    }
    let paths = paths?;
    let exchange = exchange_detected(&paths);
    if exchange != (winding.value.rem_euclid(2) == 1) {
        return Err(Error::InconsistentCertificate {
            winding: winding.value,
            exchange,
        });
    }
    Ok(Certificate {
        winding,
        exchange,
        paths,
    })
}

/// Model energies checked against full solutions on the loop.
#[derive(Debug, Clone, PartialEq)]
pub struct HardCheck {
    /// Largest distance between model and solver energies.
    pub max_deviation: f64,
    /// Accepted deviation, `1e-3 max |sqrt(eta)|` on the loop.
    pub bound: f64,
    pub passed: bool,
    /// True when the pair tracked once around the loop comes back with the
    /// two states interchanged.
    pub swapped: bool,
    /// Tracked pairs at the loop points (plus the closing point).
    pub pairs: Vec<ResonancePair>,
}

/// Solves at `points` loop points (16 by default in the command line
/// tool), tracking the pair around the loop starting from `reference`.
pub fn hard_verify<S: PairSource + ?Sized>(
    source: &S,
    coeffs: &ModelCoefficients,
    reference: &ResonancePair,
    points: usize,
) -> Result<HardCheck> {
    let lp = LoopDiscretization::around(coeffs, points)?;
    let mut pairs = Vec::with_capacity(points + 1);
    let mut current = source.track_pair(lp.point(0), reference)?;
    pairs.push(current.clone());
    for i in 1..=points {
        current = source.track_pair(lp.point(i), &current)?;
        pairs.push(current.clone());
    }
    let mut max_deviation: f64 = 0.0;
    let mut max_root: f64 = 0.0;
    for pair in &pairs {
        let (kappa, eta) = crate::octagon::eval_model(coeffs, pair.at);
        let r = eta.sqrt();
        max_root = max_root.max(r.norm());
        let (m1, m2) = ((kappa + r) / 2.0, (kappa - r) / 2.0);
        let (s1, s2) = (pair.first.energy, pair.second.energy);
        let direct = (m1 - s1).norm().max((m2 - s2).norm());
        let crossed = (m1 - s2).norm().max((m2 - s1).norm());
        max_deviation = max_deviation.max(direct.min(crossed));
    }
    let start = &pairs[0];
    let end = &pairs[points];
    let same = (end.first.energy - start.first.energy).norm() + (end.second.energy - start.second.energy).norm();
    let cross = (end.first.energy - start.second.energy).norm() + (end.second.energy - start.first.energy).norm();
    let bound = 1e-3 * max_root;
    Ok(HardCheck {
        max_deviation,
        bound,
        passed: max_deviation <= bound,
        swapped: cross < same,
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// eta(x, y) = d + x + i y, a circle of radius 1 around -d in the eta
    /// plane on the unit loop.
    fn linear(d: Complex64) -> ModelCoefficients {
        let zero = c(0.0, 0.0);
        ModelCoefficients {
            kappa0: c(-1.0, 0.0),
            kappa_gamma: zero,
            kappa_f: zero,
            eta0: d,
            eta_gamma: c(1.0, 0.0),
            eta_f: c(0.0, 1.0),
            eta_gg: zero,
            eta_gf: zero,
            eta_ff: zero,
            center: FieldPoint::new(2.0, 0.0),
            h_gamma: 1.0,
            h_f: 1.0,
        }
    }

    #[test]
    fn unit_circle_winds_once() {
        let m = linear(c(0.0, 0.0));
        let lp = LoopDiscretization::around(&m, 256).unwrap();
        assert_eq!(winding_number(&m, &lp).unwrap().value, 1);
    }

    #[test]
    fn shifted_circle_does_not_wind() {
        let m = linear(c(2.0, 0.0));
        let lp = LoopDiscretization::around(&m, 256).unwrap();
        assert_eq!(winding_number(&m, &lp).unwrap().value, 0);
        let cert = certify(&m, &lp).unwrap();
        assert!(!cert.exchange);
        let (closed, _) = cert.paths.endpoint_mismatch();
        assert!(closed < 1e-10 * cert.paths.max_half_gap());
    }

    #[test]
    fn enclosed_zero_exchanges() {
        let m = linear(c(0.3, -0.2));
        let lp = LoopDiscretization::around(&m, 512).unwrap();
        let cert = certify(&m, &lp).unwrap();
        assert_eq!(cert.winding.value, 1);
        assert!(cert.exchange);
        let (_, swapped) = cert.paths.endpoint_mismatch();
        assert!(swapped < 1e-10 * cert.paths.max_half_gap());
    }

    #[test]
    fn constant_model_gives_constant_paths() {
        let mut m = linear(c(1.0, 1.0));
        m.eta_gamma = c(0.0, 0.0);
        m.eta_f = c(0.0, 0.0);
        let lp = LoopDiscretization::around(&m, 64).unwrap();
        let paths = resonance_paths(&m, &lp).unwrap();
        assert!(paths.first.iter().all(|&e| (e - paths.first[0]).norm() < 1e-15));
        assert!(paths.second.iter().all(|&e| (e - paths.second[0]).norm() < 1e-15));
    }

    #[test]
    fn zero_on_loop_is_reported() {
        let m = linear(c(-1.0, 0.0));
        let lp = LoopDiscretization::around(&m, 64).unwrap();
        assert!(matches!(winding_number(&m, &lp), Err(Error::ZeroOnLoop(_))));
    }

    #[test]
    fn too_few_points_rejected() {
        let m = linear(c(0.0, 0.0));
        assert!(LoopDiscretization::around(&m, 8).is_err());
    }
}
