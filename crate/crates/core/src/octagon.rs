//! Nine-point octagon stencil and the two-level model fitted on it.
//!
//! Around a center `(gamma0, f0)` the sum and squared difference of the two
//! tracked energies are modelled as
//!
//! ```text
//! kappa(x, y) = A + B x + C y
//! eta(x, y)   = D + E x + F y + G x^2 + H x y + I y^2
//! ```
//!
//! with `x = gamma - gamma0`, `y = f - f0`. A real zero of `eta` is the
//! estimate of the exceptional point. It is found by eliminating one
//! variable, which leaves a real polynomial of degree at most four, and by
//! following the root that starts at the origin when the constant term is
//! switched on gradually (`D -> epsilon D`, `epsilon: 0 -> 1`).

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::linalg::dense_eigen;
use crate::spectral::{PairSource, ResonancePair};
use crate::{Error, FieldPoint, Result};

/// Stencil points: index 0 is the center, point `i = 1..=8` sits at angle
/// `(i - 1) pi / 4` on the ellipse with half axes `h_gamma`, `h_f`.
pub fn octagon_points(center: FieldPoint, h_gamma: f64, h_f: f64) -> Result<[FieldPoint; 9]> {
    if !(h_gamma > 0.0 && h_f > 0.0) {
        return Err(Error::InvalidInput(format!(
            "stencil half widths must be positive (h_gamma = {h_gamma:e}, h_f = {h_f:e})"
        )));
    }
    let lowest = center.gamma - h_gamma;
    if lowest <= 0.0 {
        return Err(Error::NegativeField(lowest));
    }
    let (cg, cf) = (h_gamma * FRAC_1_SQRT_2, h_f * FRAC_1_SQRT_2);
    let offsets = [
        (0.0, 0.0),
        (h_gamma, 0.0),
        (cg, cf),
        (0.0, h_f),
        (-cg, cf),
        (-h_gamma, 0.0),
        (-cg, -cf),
        (0.0, -h_f),
        (cg, -cf),
    ];
    Ok(offsets.map(|(dg, df)| center.offset(dg, df)))
}

/// Tracked pairs on the nine stencil points.
#[derive(Debug, Clone)]
pub struct OctagonSample {
    pub center: FieldPoint,
    pub h_gamma: f64,
    pub h_f: f64,
    pub points: [FieldPoint; 9],
    pub kappas: [Complex64; 9],
    pub etas: [Complex64; 9],
    pub pairs: Vec<ResonancePair>,
}

impl OctagonSample {
    /// Builds a sample from already computed pairs, one per stencil point.
    pub fn from_pairs(center: FieldPoint, h_gamma: f64, h_f: f64, pairs: Vec<ResonancePair>) -> Result<Self> {
        let points = octagon_points(center, h_gamma, h_f)?;
        if pairs.len() != 9 {
            return Err(Error::InvalidInput(format!("expected 9 pairs, got {}", pairs.len())));
        }
        let kappas = std::array::from_fn(|i| pairs[i].kappa);
        let etas = std::array::from_fn(|i| pairs[i].eta);
        Ok(Self {
            center,
            h_gamma,
            h_f,
            points,
            kappas,
            etas,
            pairs,
        })
    }

    /// Pair at the stencil center.
    pub fn center_pair(&self) -> &ResonancePair {
        &self.pairs[0]
    }
}

/// Solves all nine stencil points, each tracked from `reference`. Points
/// are processed in parallel; failures carry the point index.
pub fn sample_octagon<S: PairSource + ?Sized>(
    center: FieldPoint,
    h_gamma: f64,
    h_f: f64,
    source: &S,
    reference: &ResonancePair,
) -> Result<OctagonSample> {
    let points = octagon_points(center, h_gamma, h_f)?;
    let pairs = points
        .par_iter()
        .enumerate()
        .map(|(index, &p)| {
            source.track_pair(p, reference).map_err(|e| Error::AtPoint {
                index,
                source: Box::new(e),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    OctagonSample::from_pairs(center, h_gamma, h_f, pairs)
}

/// Coefficients of the two-level model. The letters of the usual notation
/// are given in brackets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelCoefficients {
    /// `[A]`
    pub kappa0: Complex64,
    /// `[B]`
    pub kappa_gamma: Complex64,
    /// `[C]`
    pub kappa_f: Complex64,
    /// `[D]`
    pub eta0: Complex64,
    /// `[E]`
    pub eta_gamma: Complex64,
    /// `[F]`
    pub eta_f: Complex64,
    /// `[G]`
    pub eta_gg: Complex64,
    /// `[H]`
    pub eta_gf: Complex64,
    /// `[I]`
    pub eta_ff: Complex64,
    pub center: FieldPoint,
    pub h_gamma: f64,
    pub h_f: f64,
}

/// Finite-difference fit on the stencil. Interpolates at the center and the
/// four axis points; the diagonal points only enter the mixed term.
pub fn fit_coefficients(sample: &OctagonSample) -> ModelCoefficients {
    let (k, e) = (&sample.kappas, &sample.etas);
    let (hg, hf) = (sample.h_gamma, sample.h_f);
    ModelCoefficients {
        kappa0: k[0],
        kappa_gamma: (k[1] - k[5]) / (2.0 * hg),
        kappa_f: (k[3] - k[7]) / (2.0 * hf),
        eta0: e[0],
        eta_gamma: (e[1] - e[5]) / (2.0 * hg),
        eta_f: (e[3] - e[7]) / (2.0 * hf),
        eta_gg: (e[1] + e[5] - 2.0 * e[0]) / (2.0 * hg * hg),
        eta_gf: (e[2] - e[4] + e[6] - e[8]) / (2.0 * hg * hf),
        eta_ff: (e[3] + e[7] - 2.0 * e[0]) / (2.0 * hf * hf),
        center: sample.center,
        h_gamma: hg,
        h_f: hf,
    }
}

impl ModelCoefficients {
    /// `(kappa, eta)` at offsets `(x, y)` from the center.
    pub fn eval_offset(&self, x: f64, y: f64) -> (Complex64, Complex64) {
        let kappa = self.kappa0 + self.kappa_gamma * x + self.kappa_f * y;
        let eta = self.eta0
            + self.eta_gamma * x
            + self.eta_f * y
            + self.eta_gg * (x * x)
            + self.eta_gf * (x * y)
            + self.eta_ff * (y * y);
        (kappa, eta)
    }

    /// Largest mismatch between model and samples on the four diagonal
    /// points, relative to the largest sampled `|eta|`. The fit does not
    /// interpolate there, so this measures how far `eta` is from quadratic.
    pub fn diagonal_defect(&self, sample: &OctagonSample) -> f64 {
        let scale = sample.etas.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        [2, 4, 6, 8]
            .iter()
            .map(|&i| {
                let p = sample.points[i];
                let (_, eta) = self.eval_offset(p.gamma - self.center.gamma, p.f - self.center.f);
                (eta - sample.etas[i]).norm()
            })
            .fold(0.0, f64::max)
            / scale
    }
}

/// `(kappa, eta)` of the model at `point`.
pub fn eval_model(coeffs: &ModelCoefficients, point: FieldPoint) -> (Complex64, Complex64) {
    coeffs.eval_offset(point.gamma - coeffs.center.gamma, point.f - coeffs.center.f)
}

/// `W(U, V) = Im U Re V - Re U Im V`.
pub fn wronskian(u: Complex64, v: Complex64) -> f64 {
    u.im * v.re - u.re * v.im
}

/// Which offset remains as the polynomial variable after elimination.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreeAxis {
    Gamma,
    Field,
}

/// `eta` in stencil-scaled offsets `t`, `s`:
/// `d + e t + f s + g t^2 + h t s + i s^2`.
#[derive(Debug, Clone, Copy)]
struct Quadric {
    d: Complex64,
    e: Complex64,
    f: Complex64,
    g: Complex64,
    h: Complex64,
    i: Complex64,
}

impl Quadric {
    /// Scaled quadric with `t = x / h_gamma`, `s = y / h_f`, normalized by
    /// its largest coefficient.
    fn from_model(c: &ModelCoefficients) -> Self {
        let (hg, hf) = (c.h_gamma, c.h_f);
        let q = Quadric {
            d: c.eta0,
            e: c.eta_gamma * hg,
            f: c.eta_f * hf,
            g: c.eta_gg * (hg * hg),
            h: c.eta_gf * (hg * hf),
            i: c.eta_ff * (hf * hf),
        };
        let scale = [q.d, q.e, q.f, q.g, q.h, q.i]
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max);
        if scale > 0.0 {
            q.scaled(1.0 / scale)
        } else {
            q
        }
    }

    fn scaled(self, k: f64) -> Self {
        Quadric {
            d: self.d * k,
            e: self.e * k,
            f: self.f * k,
            g: self.g * k,
            h: self.h * k,
            i: self.i * k,
        }
    }

    fn swapped(self) -> Self {
        Quadric {
            d: self.d,
            e: self.f,
            f: self.e,
            g: self.i,
            h: self.h,
            i: self.g,
        }
    }

    /// Real Newton iteration on `Re eta = Im eta = 0` (with `D` scaled by
    /// `epsilon`) from `(t, s)`; `None` unless it converges.
    fn polish(&self, epsilon: f64, mut t: f64, mut s: f64) -> Option<(f64, f64)> {
        for _ in 0..POLISH_ITERATIONS {
            let v = self.d * epsilon + self.e * t + self.f * s + self.g * (t * t) + self.h * (t * s) + self.i * (s * s);
            let dt = self.e + self.g * (2.0 * t) + self.h * s;
            let ds = self.f + self.h * t + self.i * (2.0 * s);
            let det = dt.re * ds.im - ds.re * dt.im;
            if det == 0.0 || !det.is_finite() {
                return None;
            }
            let st = (v.re * ds.im - v.im * ds.re) / det;
            let ss = (v.im * dt.re - v.re * dt.im) / det;
            t -= st;
            s -= ss;
            if st.abs() + ss.abs() <= 1e-15 * (1.0 + t.abs() + s.abs()) {
                return Some((t, s));
            }
        }
        None
    }

    fn max_coeff(&self) -> f64 {
        [self.e, self.f, self.g, self.h, self.i]
            .iter()
            .map(|z| z.norm())
            .fold(self.d.norm(), f64::max)
    }
}

/// How the eliminated offset follows from the free one.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Partner {
    /// `s = -P(t) / Q(t)` with `P = [p0, p1, p2]`, `Q = [q0, q1]`.
    Ratio { p: [f64; 3], q: [f64; 2] },
    /// `eta` is linear in `s`: `s = -c(t) / b(t)`.
    Linear,
}

/// Degree-four (or lower) real polynomial whose real roots are the free
/// offsets of the real zeros of `eta` (with `D` replaced by `epsilon D`).
#[derive(Debug, Clone, Copy)]
pub struct Quartic {
    /// Ascending coefficients in the scaled free variable `t = x / h_gamma`
    /// (or `y / h_f` when [`FreeAxis::Field`]).
    pub scaled: [f64; 5],
    pub free: FreeAxis,
    pub epsilon: f64,
    quadric: Quadric,
    partner: Partner,
    h_gamma: f64,
    h_f: f64,
}

const ZERO_REL: f64 = 1e-14;

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn poly_eval(c: &[f64], z: Complex64) -> Complex64 {
    c.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &x| acc * z + x)
}

/// Elimination for a fixed orientation; `None` when the eliminating
/// combination vanishes identically.
fn eliminate(q: &Quadric, epsilon: f64) -> Option<([f64; 5], Partner)> {
    let a = q.i;
    let b = [q.f, q.h];
    let c = [q.d * epsilon, q.e, q.g];
    let tiny = ZERO_REL * q.max_coeff();
    if a.norm() <= tiny {
        // eta linear in s: Im(conj(b) c) = 0 is a cubic in t
        let br: Vec<f64> = b.iter().map(|z| z.re).collect();
        let bi: Vec<f64> = b.iter().map(|z| z.im).collect();
        let cr: Vec<f64> = c.iter().map(|z| z.re).collect();
        let ci: Vec<f64> = c.iter().map(|z| z.im).collect();
        let lhs = poly_mul(&br, &ci);
        let rhs = poly_mul(&bi, &cr);
        let mut out = [0.0; 5];
        for k in 0..lhs.len() {
            out[k] = lhs[k] - rhs[k];
        }
        let bmax = b.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if bmax <= tiny {
            return None;
        }
        return Some((out, Partner::Linear));
    }
    let p = [wronskian(c[0], a), wronskian(c[1], a), wronskian(c[2], a)];
    let qq = [wronskian(b[0], a), wronskian(b[1], a)];
    if qq[0].abs().max(qq[1].abs()) <= tiny * a.norm() {
        return None;
    }
    // Re(conj(a) eta) after s = -P/Q, times Q^2
    let aa = a.norm_sqr();
    let rab: Vec<f64> = b.iter().map(|z| (a.conj() * z).re).collect();
    let rac: Vec<f64> = c.iter().map(|z| (a.conj() * z).re).collect();
    let p2 = poly_mul(&p, &p);
    let pq = poly_mul(&p, &qq);
    let rab_pq = poly_mul(&rab, &pq);
    let q2 = poly_mul(&qq, &qq);
    let rac_q2 = poly_mul(&rac, &q2);
    let mut out = [0.0; 5];
    for k in 0..5 {
        out[k] = aa * p2[k] - rab_pq[k] + rac_q2[k];
    }
    Some((out, Partner::Ratio { p, q: qq }))
}

/// Eliminates the field offset `y` (or `x` if that is degenerate) from the
/// real and imaginary parts of `eta = 0`, with `D` scaled by `epsilon`.
pub fn quartic_from_coeffs(coeffs: &ModelCoefficients, epsilon: f64) -> Result<Quartic> {
    let base = Quadric::from_model(coeffs);
    for (free, q) in [(FreeAxis::Gamma, base), (FreeAxis::Field, base.swapped())] {
        if let Some((scaled, partner)) = eliminate(&q, epsilon) {
            return Ok(Quartic {
                scaled,
                free,
                epsilon,
                quadric: q,
                partner,
                h_gamma: coeffs.h_gamma,
                h_f: coeffs.h_f,
            });
        }
    }
    Err(Error::DegenerateElimination(
        "eta does not determine a point in either orientation".into(),
    ))
}

impl Quartic {
    /// Coefficients in the unscaled free offset (`x` or `y`).
    pub fn coefficients(&self) -> [f64; 5] {
        let h = self.free_scale();
        std::array::from_fn(|k| self.scaled[k] / h.powi(k as i32))
    }

    fn free_scale(&self) -> f64 {
        match self.free {
            FreeAxis::Gamma => self.h_gamma,
            FreeAxis::Field => self.h_f,
        }
    }

    fn partner_scale(&self) -> f64 {
        match self.free {
            FreeAxis::Gamma => self.h_f,
            FreeAxis::Field => self.h_gamma,
        }
    }

    /// Roots in the scaled free variable.
    fn scaled_roots(&self) -> Vec<Complex64> {
        polynomial_roots(&self.scaled)
    }

    /// Eliminated scaled offset belonging to the scaled free value `t`.
    fn partner_of(&self, t: Complex64) -> Complex64 {
        match self.partner {
            Partner::Ratio { p, q } => -poly_eval(&p, t) / poly_eval(&q, t),
            Partner::Linear => {
                let q = &self.quadric;
                let c = q.d * self.epsilon + q.e * t + q.g * t * t;
                let b = q.f + q.h * t;
                -c / b
            }
        }
    }

    /// Offsets `(x, y)` from a scaled free value `t` and its partner.
    fn offsets(&self, t: Complex64) -> (Complex64, Complex64) {
        self.unscaled((t, self.partner_of(t)))
    }

    /// Scaled pairs `(t, s)` solving `eta = 0` for every root `t`. The
    /// partner comes from the quadratic in `s`, both of its roots kept, so
    /// it stays well defined where the ratio form turns into `0 / 0`.
    fn scaled_candidates(&self) -> Vec<(Complex64, Complex64)> {
        let q = &self.quadric;
        let mut out = Vec::new();
        for t in self.scaled_roots() {
            let b = q.f + q.h * t;
            let c = q.d * self.epsilon + q.e * t + q.g * t * t;
            match self.partner {
                Partner::Linear => out.push((t, -c / b)),
                Partner::Ratio { .. } => {
                    let root = (b * b - 4.0 * q.i * c).sqrt();
                    // pick the sign that avoids cancellation
                    let root = if (b.conj() * root).re >= 0.0 { root } else { -root };
                    let w = -(b + root) / 2.0;
                    out.push((t, w / q.i));
                    if w.norm() > 0.0 {
                        out.push((t, c / w));
                    }
                }
            }
        }
        out
    }

    /// Offsets `(x, y)` from scaled `(t, s)`.
    fn unscaled(&self, ts: (Complex64, Complex64)) -> (Complex64, Complex64) {
        let (t, s) = ts;
        let (tf, sf) = (t * self.free_scale(), s * self.partner_scale());
        match self.free {
            FreeAxis::Gamma => (tf, sf),
            FreeAxis::Field => (sf, tf),
        }
    }

    /// All roots as complex offsets `(x, y)`.
    pub fn solutions(&self) -> Vec<(Complex64, Complex64)> {
        self.scaled_roots().into_iter().map(|t| self.offsets(t)).collect()
    }
}

/// Roots of a real polynomial (ascending coefficients) from the companion
/// matrix, polished by a few Newton steps. Negligible leading coefficients
/// are dropped.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let scale = coeffs.iter().map(|c| c.abs()).fold(0.0, f64::max);
    if scale == 0.0 {
        return Vec::new();
    }
    let mut deg = coeffs.len() - 1;
    while deg > 0 && coeffs[deg].abs() <= 1e-13 * scale {
        deg -= 1;
    }
    if deg == 0 {
        return Vec::new();
    }
    let c = &coeffs[..=deg];
    let lead = c[deg];
    let mut comp = DMatrix::<Complex64>::zeros(deg, deg);
    for j in 0..deg {
        comp[(0, j)] = Complex64::new(-c[deg - 1 - j] / lead, 0.0);
    }
    for i in 1..deg {
        comp[(i, i - 1)] = Complex64::new(1.0, 0.0);
    }
    let roots = match dense_eigen(comp) {
        Some(e) => e.values,
        None => return Vec::new(),
    };
    let deriv: Vec<f64> = (1..=deg).map(|k| k as f64 * c[k]).collect();
    roots
        .into_iter()
        .map(|mut z| {
            for _ in 0..3 {
                let d = poly_eval(&deriv, z);
                if d.norm() == 0.0 {
                    break;
                }
                let step = poly_eval(c, z) / d;
                let next = z - step;
                if !(next.re.is_finite() && next.im.is_finite()) {
                    break;
                }
                // keep the polished value only if it improves the residual
                if poly_eval(c, next).norm() <= poly_eval(c, z).norm() {
                    z = next;
                } else {
                    break;
                }
            }
            z
        })
        .collect()
}

/// A root counts as real when `|Im| <= 1e-9 max(1, |Re|)`.
pub fn is_real_root(z: Complex64) -> bool {
    z.im.abs() <= 1e-9 * z.re.abs().max(1.0)
}

/// Result of following the root from `epsilon = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Continuation {
    /// Offset from the center in `gamma`.
    pub x: f64,
    /// Offset from the center in `f`.
    pub y: f64,
    /// Largest epsilon at which the tracked root was still real.
    pub epsilon: f64,
    /// True when the root stayed real up to `epsilon = 1`.
    pub complete: bool,
}

/// Epsilon grid spacing of the continuation.
pub const EPSILON_STEP: f64 = 0.01;
const EPSILON_MIN_STEP: f64 = 1e-12;
const POLISH_ITERATIONS: usize = 30;
/// Largest move of a polished root, relative to its size.
const POLISH_RADIUS: f64 = 1e-5;

/// Follows the root that sits at the origin for `epsilon = 0` up to
/// `epsilon = 1`. Stops early, flagged incomplete, where the root turns
/// complex.
pub fn epsilon_continue(coeffs: &ModelCoefficients) -> Result<Continuation> {
    epsilon_continue_with(coeffs, EPSILON_STEP)
}

/// As [`epsilon_continue`] with a chosen initial grid spacing.
pub fn epsilon_continue_with(coeffs: &ModelCoefficients, step0: f64) -> Result<Continuation> {
    if !(step0 > 0.0 && step0 <= 1.0) {
        return Err(Error::InvalidInput(format!("epsilon step {step0} outside (0, 1]")));
    }
    let done = |x: f64, y: f64, epsilon: f64, complete: bool| Continuation { x, y, epsilon, complete };
    if coeffs.eta0.norm() == 0.0 {
        return Ok(done(0.0, 0.0, 1.0, true));
    }
    let mut quartic = quartic_from_coeffs(coeffs, 0.0)?;
    // tracked in both scaled offsets: two zeros may share the free offset,
    // where nearest-root matching in that offset alone picks either
    let mut cur = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    let mut eps = 0.0;
    let mut step = step0;
    while eps < 1.0 {
        let next = (eps + step).min(1.0);
        let trial = quartic_from_coeffs(coeffs, next)?;
        let cands = trial.scaled_candidates();
        let dist = |z: &(Complex64, Complex64)| ((z.0 - cur.0).norm_sqr() + (z.1 - cur.1).norm_sqr()).sqrt();
        let best = cands
            .iter()
            .enumerate()
            .min_by(|a, b| dist(a.1).partial_cmp(&dist(b.1)).unwrap_or(std::cmp::Ordering::Equal));
        let Some((k, &z)) = best else {
            return Err(Error::ContinuationFailed(format!("no roots at epsilon = {next}")));
        };
        let separation = cands
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != k)
            .map(|(_, w)| ((w.0 - z.0).norm_sqr() + (w.1 - z.1).norm_sqr()).sqrt())
            .fold(f64::INFINITY, f64::min);
        // near-double roots come out of the companion matrix with an
        // imaginary part of order sqrt(machine epsilon); a real Newton
        // polish tells such a crossing from a genuine exit
        let polished = trial.quadric.polish(next, z.0.re, z.1.re).filter(|p| {
            let moved = ((p.0 - z.0.re).powi(2) + (p.1 - z.1.re).powi(2)).sqrt();
            moved <= POLISH_RADIUS * z.0.norm().max(z.1.norm()).max(1.0)
        });
        let z = polished.map_or(z, |p| (Complex64::new(p.0, 0.0), Complex64::new(p.1, 0.0)));
        let real = is_real_root(z.0) && is_real_root(z.1);
        let ambiguous = !(dist(&z) <= 0.5 * separation);
        if ambiguous {
            if step > EPSILON_MIN_STEP {
                step *= 0.5;
                continue;
            }
            if !real {
                // the root pair leaves the real plane here
                break;
            }
        }
        if !real {
            if step > EPSILON_MIN_STEP {
                // locate where the root leaves the real plane
                step *= 0.5;
                continue;
            }
            break;
        }
        cur = (Complex64::new(z.0.re, 0.0), Complex64::new(z.1.re, 0.0));
        eps = next;
        quartic = trial;
        step = (2.0 * step).min(step0);
    }
    let (x, y) = quartic.unscaled(cur);
    Ok(done(x.re, y.re, eps, eps >= 1.0))
}

/// Estimate of the exceptional point from a fitted model.
#[derive(Debug, Clone, PartialEq)]
pub struct EpCandidate {
    pub point: FieldPoint,
    pub continuation: Continuation,
    /// All roots `(x, y)` of the eliminated system at `epsilon = 1`.
    pub roots: Vec<(Complex64, Complex64)>,
    /// `|Re eta| + |Im eta|` of the model at the chosen point.
    pub residual: f64,
}

impl EpCandidate {
    pub fn step(&self) -> (f64, f64) {
        (self.continuation.x, self.continuation.y)
    }
}

/// Continuation root as an absolute field point, with diagnostics.
pub fn ep_candidate(coeffs: &ModelCoefficients) -> Result<EpCandidate> {
    let continuation = epsilon_continue(coeffs)?;
    let roots = if coeffs.eta0.norm() == 0.0 {
        Vec::new()
    } else {
        quartic_from_coeffs(coeffs, 1.0)?.solutions()
    };
    let (_, eta) = coeffs.eval_offset(continuation.x, continuation.y);
    Ok(EpCandidate {
        point: coeffs.center.offset(continuation.x, continuation.y),
        continuation,
        roots,
        residual: eta.re.abs() + eta.im.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rc(rng: &mut ChaCha8Rng) -> Complex64 {
        c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    }

    fn model(d: Complex64, rest: [Complex64; 5], center: FieldPoint, h: (f64, f64)) -> ModelCoefficients {
        ModelCoefficients {
            kappa0: c(0.0, 0.0),
            kappa_gamma: c(0.0, 0.0),
            kappa_f: c(0.0, 0.0),
            eta0: d,
            eta_gamma: rest[0],
            eta_f: rest[1],
            eta_gg: rest[2],
            eta_gf: rest[3],
            eta_ff: rest[4],
            center,
            h_gamma: h.0,
            h_f: h.1,
        }
    }

    #[test]
    fn stencil_geometry() {
        let p = octagon_points(FieldPoint::new(1.0, 1.0), 0.1, 0.2).unwrap();
        assert_eq!(p[1], FieldPoint::new(1.1, 1.0));
        assert_eq!(p[3], FieldPoint::new(1.0, 1.2));
        assert_eq!(p[5], FieldPoint::new(0.9, 1.0));
        assert_eq!(p[7], FieldPoint::new(1.0, 0.8));
        assert!((p[2].gamma - (1.0 + 0.1 * FRAC_1_SQRT_2)).abs() < 1e-15);
        assert!((p[2].f - (1.0 + 0.2 * FRAC_1_SQRT_2)).abs() < 1e-15);
        let (sg, sf) = p[1..].iter().fold((0.0, 0.0), |(a, b), q| (a + q.gamma - 1.0, b + q.f - 1.0));
        assert!(sg.abs() < 1e-15 && sf.abs() < 1e-15);
    }

    #[test]
    fn stencil_rejects_nonpositive_gamma() {
        assert!(matches!(
            octagon_points(FieldPoint::new(0.1, 0.0), 0.1, 0.1),
            Err(Error::NegativeField(_))
        ));
    }

    #[test]
    fn quadratic_eta_is_fitted_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let center = FieldPoint::new(1e-3, 2e-5);
        let (hg, hf) = (4e-5, 1e-6);
        let truth = model(rc(&mut rng), std::array::from_fn(|_| rc(&mut rng)), center, (hg, hf));
        let truth = ModelCoefficients {
            kappa0: rc(&mut rng),
            kappa_gamma: rc(&mut rng),
            kappa_f: rc(&mut rng),
            ..truth
        };
        let points = octagon_points(center, hg, hf).unwrap();
        let (kappas, etas): (Vec<_>, Vec<_>) = points.iter().map(|&p| eval_model(&truth, p)).unzip();
        let sample = OctagonSample {
            center,
            h_gamma: hg,
            h_f: hf,
            points,
            kappas: kappas.try_into().unwrap(),
            etas: etas.try_into().unwrap(),
            pairs: Vec::new(),
        };
        let fit = fit_coefficients(&sample);
        let pairs = [
            (fit.kappa0, truth.kappa0, 1.0),
            (fit.kappa_gamma, truth.kappa_gamma, hg),
            (fit.kappa_f, truth.kappa_f, hf),
            (fit.eta0, truth.eta0, 1.0),
            (fit.eta_gamma, truth.eta_gamma, hg),
            (fit.eta_f, truth.eta_f, hf),
            (fit.eta_gg, truth.eta_gg, hg * hg),
            (fit.eta_gf, truth.eta_gf, hg * hf),
            (fit.eta_ff, truth.eta_ff, hf * hf),
        ];
        for (got, want, scale) in pairs {
            // compare in stencil units, where all terms are of order one
            assert!(((got - want) * scale).norm() < 1e-12, "{got} vs {want}");
        }
        assert!(fit.diagonal_defect(&sample) < 1e-12);
    }

    #[test]
    fn constant_eta_fit() {
        let center = FieldPoint::new(1.0, 0.5);
        let points = octagon_points(center, 0.1, 0.1).unwrap();
        let sample = OctagonSample {
            center,
            h_gamma: 0.1,
            h_f: 0.1,
            points,
            kappas: [c(2.0, -1.0); 9],
            etas: [c(0.3, 0.7); 9],
            pairs: Vec::new(),
        };
        let fit = fit_coefficients(&sample);
        assert_eq!(fit.eta0, c(0.3, 0.7));
        for z in [fit.eta_gamma, fit.eta_f, fit.eta_gg, fit.eta_gf, fit.eta_ff, fit.kappa_gamma, fit.kappa_f] {
            assert_eq!(z, c(0.0, 0.0));
        }
        let (k, e) = eval_model(&fit, center);
        assert_eq!((k, e), (fit.kappa0, fit.eta0));
    }

    #[test]
    fn zero_epsilon_has_root_at_origin() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = model(rc(&mut rng), std::array::from_fn(|_| rc(&mut rng)), FieldPoint::new(1.0, 1.0), (0.1, 0.1));
        let q = quartic_from_coeffs(&m, 0.0).unwrap();
        assert_eq!(q.scaled[0], 0.0);
    }

    #[test]
    fn linear_model_matches_direct_solve() {
        let m = model(c(0.3, -0.2), [c(1.0, 0.5), c(-0.4, 1.2), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)], FieldPoint::new(2.0, 1.0), (1.0, 1.0));
        // D + E x + F y = 0 as a real 2x2 system
        let (d, e, f) = (m.eta0, m.eta_gamma, m.eta_f);
        let det = e.re * f.im - f.re * e.im;
        let x = (-d.re * f.im + f.re * d.im) / det;
        let y = (-e.re * d.im + d.re * e.im) / det;
        let sol = epsilon_continue(&m).unwrap();
        assert!(sol.complete);
        assert!((sol.x - x).abs() < 1e-13 && (sol.y - y).abs() < 1e-13);
    }

    #[test]
    fn roots_solve_the_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let m = model(rc(&mut rng), std::array::from_fn(|_| rc(&mut rng)), FieldPoint::new(5.0, 5.0), (1.0, 1.0));
            let q = quartic_from_coeffs(&m, 1.0).unwrap();
            for (x, y) in q.solutions() {
                if is_real_root(x) && is_real_root(y) && x.re.abs() < 10.0 && y.re.abs() < 10.0 {
                    let (_, eta) = m.eval_offset(x.re, y.re);
                    assert!(eta.re.abs() + eta.im.abs() <= 1e-9 * m.eta0.norm(), "{eta}");
                }
            }
        }
    }

    #[test]
    fn planted_root_is_recovered() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut recovered = 0;
        for _ in 0..100 {
            let rest: [Complex64; 5] = std::array::from_fn(|_| rc(&mut rng));
            let (xs, ys) = (rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3));
            let d = -(rest[0] * xs + rest[1] * ys + rest[2] * xs * xs + rest[3] * xs * ys + rest[4] * ys * ys);
            let m = model(d, rest, FieldPoint::new(3.0, 3.0), (1.0, 1.0));
            let sol = epsilon_continue(&m).unwrap();
            if sol.complete && (sol.x - xs).abs() < 1e-10 && (sol.y - ys).abs() < 1e-10 {
                recovered += 1;
            } else if sol.complete {
                // landed on another real zero of the same quadratic
                let (_, eta) = m.eval_offset(sol.x, sol.y);
                assert!(eta.norm() < 1e-12 * d.norm().max(1.0));
            }
        }
        // with curvature as large as the linear terms a random quadratic has
        // several real zeros near the origin, and continuation may reach
        // another one first
        assert!(recovered >= 75, "{recovered}");
    }

    #[test]
    fn zero_constant_term_returns_center() {
        let m = model(c(0.0, 0.0), [c(1.0, 0.0); 5], FieldPoint::new(1.0, 1.0), (0.1, 0.1));
        let cand = ep_candidate(&m).unwrap();
        assert_eq!(cand.point, m.center);
        assert!(cand.continuation.complete);
    }

    #[test]
    fn companion_roots() {
        // (t - 1)(t + 2)(t^2 + 1) = t^4 + t^3 - t^2 + t - 2
        let r = polynomial_roots(&[-2.0, 1.0, -1.0, 1.0, 1.0]);
        assert_eq!(r.len(), 4);
        for want in [c(-2.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(1.0, 0.0)] {
            assert!(r.iter().any(|z| (z - want).norm() < 1e-13), "{want} missing from {r:?}");
        }
        // negligible leading coefficient drops the degree
        assert_eq!(polynomial_roots(&[1.0, 1.0, 0.0, 0.0, 1e-20]).len(), 1);
    }

    #[test]
    fn swapped_orientation_when_elimination_degenerates() {
        // F, H and I all real: the y-elimination vanishes identically
        let m = model(
            c(0.2, 0.1),
            [c(1.0, 0.3), c(0.5, 0.0), c(0.2, -0.4), c(0.1, 0.0), c(0.3, 0.0)],
            FieldPoint::new(2.0, 2.0),
            (1.0, 1.0),
        );
        let q = quartic_from_coeffs(&m, 1.0).unwrap();
        assert_eq!(q.free, FreeAxis::Field);
        let sol = epsilon_continue(&m).unwrap();
        if sol.complete {
            let (_, eta) = m.eval_offset(sol.x, sol.y);
            assert!(eta.norm() < 1e-10);
        }
    }
}
