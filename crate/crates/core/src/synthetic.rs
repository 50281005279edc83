//! Two-level models with a planted exceptional point, used to test the
//! search pipeline without the basis solver.
//!
//! The model matrix is
//!
//! ```text
//! M(x, y) = [ k/2 + a    b    ]
//!           [   c      k/2 - a ]
//! ```
//!
//! with `k`, `a`, `b`, `c` affine in the scaled offsets from the planted
//! point. Its eigenvalues are `k/2 +- sqrt(a^2 + b c)`, so `kappa = k` is
//! affine and `eta = 4 (a^2 + b c)` is exactly quadratic, and the planted
//! point is a zero of `eta` by construction.

use num_complex::Complex64;
use rand::Rng;

use crate::spectral::{PairSource, Resonance, ResonancePair};
use crate::{Error, FieldPoint, Result};

/// Smallest accepted [`PlantedModel::conditioning`] of random draws, per
/// unit slope.
pub const MIN_CONDITIONING: f64 = 0.5;

/// Affine function `c0 + cx u + cy v` of scaled offsets.
type Affine = [Complex64; 3];

fn affine(f: &Affine, u: f64, v: f64) -> Complex64 {
    f[0] + f[1] * u + f[2] * v
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantedModel {
    /// Location of the planted exceptional point.
    pub ep: FieldPoint,
    /// Offsets are measured in units of these lengths.
    pub scale: (f64, f64),
    pub kappa: Affine,
    pub a: Affine,
    pub b: Affine,
    pub c: Affine,
}

impl PlantedModel {
    /// Random model with unit-size values at the planted point and slopes
    /// of size `slope` (per unit scaled offset). The curvature of `eta` is
    /// of order `slope^2` against linear terms of order `slope`, so further
    /// zeros of `eta` lie about `1/slope` scale units away. The planted zero
    /// is made positively oriented: `(Re eta, Im eta)` turns counterclockwise
    /// around it. Draws with [`Self::conditioning`] below
    /// `MIN_CONDITIONING * slope` are redrawn: there the zero is close to a
    /// double one, with further zeros and fold lines of the continuation
    /// nearby.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, ep: FieldPoint, scale: (f64, f64), slope: f64) -> Self {
        let mut model = loop {
            let mut z = |s: f64| Complex64::new(rng.gen_range(-s..s), rng.gen_range(-s..s));
            let kappa = [Complex64::new(-1.0, -0.01) + z(0.2), z(slope), z(slope)];
            let a = [Complex64::new(0.5, 0.0) + z(0.5), z(slope), z(slope)];
            let b = [Complex64::new(0.5, 0.0) + z(0.5), z(slope), z(slope)];
            let c0 = -a[0] * a[0] / b[0];
            let c = [c0, z(slope), z(slope)];
            let model = Self { ep, scale, kappa, a, b, c };
            if model.conditioning() >= MIN_CONDITIONING * slope {
                break model;
            }
        };
        if model.orientation() < 0.0 {
            model.mirror_field_axis();
        }
        model
    }

    /// Flips the sign of every field slope, reversing the orientation of
    /// the planted zero.
    fn mirror_field_axis(&mut self) {
        for f in [&mut self.kappa, &mut self.a, &mut self.b, &mut self.c] {
            f[2] = -f[2];
        }
    }

    fn scaled(&self, p: FieldPoint) -> (f64, f64) {
        ((p.gamma - self.ep.gamma) / self.scale.0, (p.f - self.ep.f) / self.scale.1)
    }

    /// Gradient of `eta` in scaled offsets at the planted point.
    fn eta_gradient(&self) -> (Complex64, Complex64) {
        let (a, b, c) = (&self.a, &self.b, &self.c);
        let d = |k: usize| 4.0 * (2.0 * a[0] * a[k] + b[k] * c[0] + b[0] * c[k]);
        (d(1), d(2))
    }

    /// Smallest singular value of the Jacobian of `(Re eta, Im eta)` at the
    /// planted point, in scaled offsets.
    pub fn conditioning(&self) -> f64 {
        let (ex, ey) = self.eta_gradient();
        let frob = ex.norm_sqr() + ey.norm_sqr();
        let det = ex.re * ey.im - ex.im * ey.re;
        ((frob - (frob * frob - 4.0 * det * det).max(0.0).sqrt()) / 2.0).sqrt()
    }

    /// Sign of the Jacobian of `(Re eta, Im eta)` at the planted point.
    pub fn orientation(&self) -> f64 {
        let (ex, ey) = self.eta_gradient();
        (ex.re * ey.im - ex.im * ey.re).signum()
    }

    /// `(kappa, eta)` at `p`.
    pub fn kappa_eta(&self, p: FieldPoint) -> (Complex64, Complex64) {
        let (u, v) = self.scaled(p);
        let a = affine(&self.a, u, v);
        let b = affine(&self.b, u, v);
        let c = affine(&self.c, u, v);
        (affine(&self.kappa, u, v), 4.0 * (a * a + b * c))
    }

    /// Mean energy at the planted point.
    pub fn ep_energy(&self) -> Complex64 {
        self.kappa[0] / 2.0
    }

    /// True when the planted point lies strictly inside the ellipse with the
    /// given center and half axes.
    pub fn inside(&self, center: FieldPoint, h_gamma: f64, h_f: f64) -> bool {
        let dx = (self.ep.gamma - center.gamma) / h_gamma;
        let dy = (self.ep.f - center.f) / h_f;
        dx * dx + dy * dy < 1.0
    }

    /// Both eigenpairs at `p`. Eigenvectors are unit Euclidean vectors.
    pub fn eigenpairs(&self, p: FieldPoint) -> [Resonance; 2] {
        let (u, v) = self.scaled(p);
        let k = affine(&self.kappa, u, v);
        let a = affine(&self.a, u, v);
        let b = affine(&self.b, u, v);
        let c = affine(&self.c, u, v);
        let root = (a * a + b * c).sqrt();
        [root, -root].map(|r| {
            // (M - E) x = 0 with E = k/2 + r: first row gives (a - r) x0 + b x1 = 0
            let vec = if b.norm() >= (a - r).norm() {
                vec![b, r - a]
            } else {
                vec![r + a, c]
            };
            Resonance::from_energy(k / 2.0 + r, vec)
        })
    }
}

impl PairSource for PlantedModel {
    fn seed_pair(&self, point: FieldPoint, _energy_guess: Complex64) -> Result<ResonancePair> {
        let [e1, e2] = self.eigenpairs(point);
        Ok(ResonancePair::new(e1, e2, point))
    }

    fn track_pair(&self, point: FieldPoint, reference: &ResonancePair) -> Result<ResonancePair> {
        let [e1, e2] = self.eigenpairs(point);
        let r = reference.first.energy;
        if !(e1.energy.re.is_finite() && e2.energy.re.is_finite()) {
            return Err(Error::InvalidInput("model is not finite here".into()));
        }
        Ok(if (e1.energy - r).norm() <= (e2.energy - r).norm() {
            ResonancePair::new(e1, e2, point)
        } else {
            ResonancePair::new(e2, e1, point)
        })
    }
}
