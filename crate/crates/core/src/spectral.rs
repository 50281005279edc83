//! Complex-rotated generalized eigenproblem in the dilated semiparabolic
//! oscillator basis, and tracking of resonance pairs between field points.
//!
//! The pencil is
//!
//! ```text
//! A = 2 (H_mu + H_nu) - 4 b^2 + b^8 gamma^2 / 4 (mu^4 nu^2 + mu^2 nu^4) + b^6 f (mu^4 - nu^4)
//! S = mu^2 + nu^2
//! ```
//!
//! with generalized eigenvalue `lambda = 1 + 2 b^4 E`.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::{h0_diagonal, radial_power_matrix, BasisIndex, BasisSpec, RadialOperator};
use crate::linalg::{
    dense_generalized_eigen, dotc, dotu, norm2, shift_invert_arnoldi, ArnoldiConfig, BandLu,
    SparseMatrix,
};
use crate::units::FieldPoint;
use crate::{Error, Result};

/// Complex dilation `b = |b| exp(i alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DilationParameter {
    pub modulus: f64,
    pub angle: f64,
}

/// Default rotation angle in radians.
pub const DEFAULT_ROTATION_ANGLE: f64 = 0.1;

impl DilationParameter {
    pub fn new(modulus: f64, angle: f64) -> Result<Self> {
        if !(modulus > 0.0) || !modulus.is_finite() {
            return Err(Error::InvalidInput(format!("|b| must be positive, got {modulus}")));
        }
        if !(0.0..std::f64::consts::FRAC_PI_4).contains(&angle) {
            return Err(Error::InvalidInput(format!(
                "rotation angle must lie in [0, pi/4), got {angle}"
            )));
        }
        Ok(Self { modulus, angle })
    }

    /// `|b| = sqrt(32/35) gamma^(-1/6)`.
    pub fn modulus_for_gamma(gamma: f64) -> f64 {
        (32.0f64 / 35.0).sqrt() * gamma.powf(-1.0 / 6.0)
    }

    pub fn for_gamma(gamma: f64, angle: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidInput("dilation rule needs gamma > 0".into()));
        }
        Self::new(Self::modulus_for_gamma(gamma), angle)
    }

    pub fn value(&self) -> Complex64 {
        Complex64::from_polar(self.modulus, self.angle)
    }
}

/// `E = (lambda - 1) / (2 b^4)`.
pub fn energy_from_lambda(lambda: Complex64, dilation: DilationParameter) -> Complex64 {
    (lambda - 1.0) / (2.0 * dilation.value().powi(4))
}

/// `lambda = 1 + 2 b^4 E`.
pub fn lambda_from_energy(energy: Complex64, dilation: DilationParameter) -> Complex64 {
    1.0 + 2.0 * dilation.value().powi(4) * energy
}

/// Field-independent operator tables of one basis, shared between solves.
#[derive(Debug)]
pub struct PencilOperators {
    spec: BasisSpec,
    index: BasisIndex,
    oscillator: Vec<f64>,
    diamagnetic: SparseMatrix,
    stark: SparseMatrix,
    overlap: SparseMatrix,
    // band ordering: position -> basis index, and its inverse
    order: Vec<usize>,
    position: Vec<usize>,
    half_bandwidth: usize,
}

impl PencilOperators {
    pub fn new(spec: BasisSpec) -> Self {
        let index = BasisIndex::new(spec);
        let n = index.len();
        let r2 = radial_power_matrix(spec, 2).expect("power 2");
        let r4 = radial_power_matrix(spec, 4).expect("power 4");
        let h = h0_diagonal(spec);
        let oscillator: Vec<f64> = index.states().iter().map(|&(a, b)| 2.0 * (h[a] + h[b])).collect();

        let mut diamagnetic = Vec::new();
        let mut stark = Vec::new();
        let mut overlap = Vec::new();
        let product = |p: &RadialOperator, q: &RadialOperator, out: &mut Vec<(usize, usize, f64)>, sign: f64| {
            for (a, a2, va) in p.band_entries() {
                for (b, b2, vb) in q.band_entries() {
                    if let (Some(i), Some(j)) = (index.index(a, b), index.index(a2, b2)) {
                        out.push((i, j, sign * va * vb));
                    }
                }
            }
        };
        let id = RadialOperator::identity(spec.n_max + 1);
        product(&r4, &r2, &mut diamagnetic, 1.0);
        product(&r2, &r4, &mut diamagnetic, 1.0);
        product(&r4, &id, &mut stark, 1.0);
        product(&id, &r4, &mut stark, -1.0);
        product(&r2, &id, &mut overlap, 1.0);
        product(&id, &r2, &mut overlap, 1.0);
        let diamagnetic = SparseMatrix::from_triplets(n, diamagnetic);
        let stark = SparseMatrix::from_triplets(n, stark);
        let overlap = SparseMatrix::from_triplets(n, overlap);

        // order by (n_mu, n_nu), which gives a narrower band than shell order
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| index.state(i));
        let mut position = vec![0; n];
        for (p, &i) in order.iter().enumerate() {
            position[i] = p;
        }
        let half_bandwidth = [&diamagnetic, &stark, &overlap]
            .iter()
            .flat_map(|m| m.iter())
            .map(|(r, c, _)| position[r].abs_diff(position[c]))
            .max()
            .unwrap_or(0);

        Self {
            spec,
            index,
            oscillator,
            diamagnetic,
            stark,
            overlap,
            order,
            position,
            half_bandwidth,
        }
    }

    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn index(&self) -> &BasisIndex {
        &self.index
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bandwidth
    }

    /// The right-hand-side operator `S = mu^2 + nu^2`.
    pub fn overlap(&self) -> &SparseMatrix {
        &self.overlap
    }
}

/// The pencil `(A, S)` at one field point.
#[derive(Debug, Clone)]
pub struct SpectralPencil {
    ops: Arc<PencilOperators>,
    pub point: FieldPoint,
    pub dilation: DilationParameter,
    shift: Complex64,
    diamagnetic_scale: Complex64,
    stark_scale: Complex64,
}

pub fn assemble(spec: BasisSpec, point: FieldPoint, dilation: DilationParameter) -> SpectralPencil {
    SpectralPencil::with_operators(Arc::new(PencilOperators::new(spec)), point, dilation)
}

impl SpectralPencil {
    pub fn with_operators(ops: Arc<PencilOperators>, point: FieldPoint, dilation: DilationParameter) -> Self {
        let b = dilation.value();
        let b2 = b * b;
        Self {
            ops,
            point,
            dilation,
            shift: -4.0 * b2,
            diamagnetic_scale: 0.25 * b2.powi(4) * point.gamma * point.gamma,
            stark_scale: b2.powi(3) * point.f,
        }
    }

    pub fn spec(&self) -> BasisSpec {
        self.ops.spec
    }

    pub fn operators(&self) -> &Arc<PencilOperators> {
        &self.ops
    }

    pub fn dim(&self) -> usize {
        self.ops.dim()
    }

    /// Entries of `A - sigma S`.
    pub fn shifted_entries(&self, sigma: Complex64) -> Vec<(usize, usize, Complex64)> {
        let ops = &*self.ops;
        let mut out = Vec::with_capacity(ops.diamagnetic.nnz() + ops.stark.nnz() + ops.overlap.nnz() + ops.dim());
        for (i, &d) in ops.oscillator.iter().enumerate() {
            out.push((i, i, Complex64::new(d, 0.0) + self.shift));
        }
        if self.diamagnetic_scale != Complex64::new(0.0, 0.0) {
            out.extend(ops.diamagnetic.iter().map(|(r, c, v)| (r, c, self.diamagnetic_scale * v)));
        }
        if self.stark_scale != Complex64::new(0.0, 0.0) {
            out.extend(ops.stark.iter().map(|(r, c, v)| (r, c, self.stark_scale * v)));
        }
        if sigma != Complex64::new(0.0, 0.0) {
            out.extend(ops.overlap.iter().map(|(r, c, v)| (r, c, -sigma * v)));
        }
        out
    }

    /// `y = A x`.
    pub fn apply_lhs(&self, x: &[Complex64], y: &mut [Complex64]) {
        let ops = &*self.ops;
        for (i, yi) in y.iter_mut().enumerate() {
            *yi = (ops.oscillator[i] + self.shift) * x[i];
        }
        ops.diamagnetic.mul_add(self.diamagnetic_scale, x, y);
        ops.stark.mul_add(self.stark_scale, x, y);
    }

    /// `y = S x`.
    pub fn apply_rhs(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        self.ops.overlap.mul_add(Complex64::new(1.0, 0.0), x, y);
    }

    pub fn lhs_dense(&self) -> DMatrix<Complex64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.shifted_entries(Complex64::new(0.0, 0.0)) {
            m[(r, c)] += v;
        }
        m
    }

    pub fn rhs_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for (r, c, v) in self.ops.overlap.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// Infinity-norm bounds used to scale residuals.
    fn norms(&self) -> (f64, f64) {
        let ops = &*self.ops;
        let a = ops
            .oscillator
            .iter()
            .map(|d| (d + self.shift).norm())
            .fold(0.0, f64::max)
            + self.diamagnetic_scale.norm() * ops.diamagnetic.max_abs_row_sum()
            + self.stark_scale.norm() * ops.stark.max_abs_row_sum();
        (a, ops.overlap.max_abs_row_sum())
    }

    /// Backward error `|A v - lambda S v| / ((|A| + |lambda| |S|) |v|)`.
    pub fn relative_residual(&self, lambda: Complex64, v: &[Complex64]) -> f64 {
        let n = self.dim();
        let mut av = vec![Complex64::new(0.0, 0.0); n];
        let mut sv = vec![Complex64::new(0.0, 0.0); n];
        self.apply_lhs(v, &mut av);
        self.apply_rhs(v, &mut sv);
        let r: f64 = av
            .iter()
            .zip(&sv)
            .map(|(a, s)| (a - lambda * s).norm_sqr())
            .sum::<f64>()
            .sqrt();
        let (na, ns) = self.norms();
        r / ((na + lambda.norm() * ns) * norm2(v))
    }

    /// Factorizes `A - sigma S` in band order.
    fn factor_shifted(&self, sigma: Complex64) -> Option<BandLu> {
        let ops = &*self.ops;
        let k = ops.half_bandwidth;
        let pos = &ops.position;
        BandLu::factor(
            self.dim(),
            k,
            k,
            self.shifted_entries(sigma).into_iter().map(|(r, c, v)| (pos[r], pos[c], v)),
        )
    }
}

/// A resonance: generalized eigenvalue, complex energy and eigenvector.
#[derive(Debug, Clone, PartialEq)]
pub struct Resonance {
    pub lambda: Complex64,
    pub energy: Complex64,
    /// Expansion coefficients in basis-index order, unit Euclidean norm with
    /// the largest component real and positive.
    pub coefficients: Vec<Complex64>,
    pub residual: f64,
}

impl Resonance {
    /// A resonance with real dilation `b = 1`, used by model sources that
    /// produce energies directly.
    pub fn from_energy(energy: Complex64, coefficients: Vec<Complex64>) -> Self {
        let dilation = DilationParameter { modulus: 1.0, angle: 0.0 };
        Self::new(lambda_from_energy(energy, dilation), coefficients, dilation, 0.0)
    }

    fn new(lambda: Complex64, mut v: Vec<Complex64>, dilation: DilationParameter, residual: f64) -> Self {
        normalize_gauge(&mut v);
        Self {
            lambda,
            energy: energy_from_lambda(lambda, dilation),
            coefficients: v,
            residual,
        }
    }
}

/// Unit Euclidean norm, largest-modulus component real positive.
pub fn normalize_gauge(v: &mut [Complex64]) {
    let nrm = norm2(v);
    if nrm == 0.0 {
        return;
    }
    let big = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().partial_cmp(&b.norm()).unwrap_or(std::cmp::Ordering::Equal))
        .unwrap_or(Complex64::new(1.0, 0.0));
    let phase = big.conj() / big.norm();
    for z in v.iter_mut() {
        *z *= phase / nrm;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Resonances requested per solve.
    pub count: usize,
    /// Required backward error of every returned resonance.
    pub residual_tol: f64,
    pub arnoldi: ArnoldiConfig,
    /// Dense fallback is allowed up to this dimension.
    pub dense_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            count: 8,
            residual_tol: 1e-10,
            arnoldi: ArnoldiConfig::default(),
            dense_limit: 1500,
        }
    }
}

/// Resonances whose eigenvalues lie nearest to the image of `target` under
/// `lambda = 1 + 2 b^4 E`, sorted by that distance.
pub fn eigensolve_near(
    pencil: &SpectralPencil,
    target: Complex64,
    count: usize,
    config: &SolverConfig,
) -> Result<Vec<Resonance>> {
    if count == 0 {
        return Err(Error::InvalidInput("count must be at least 1".into()));
    }
    if !target.re.is_finite() || !target.im.is_finite() {
        return Err(Error::InvalidInput("target energy must be finite".into()));
    }
    let sigma = lambda_from_energy(target, pencil.dilation);
    let mut result = shift_invert(pencil, sigma, count, config);
    if matches!(result, Err(Error::SingularShift { .. }) | Err(Error::NoConvergence(_))) {
        // move the shift off a (near) exact eigenvalue and try once more
        let nudged = sigma + Complex64::new(1e-7, 1e-7) * sigma.norm().max(1.0);
        let retry = SolverConfig {
            arnoldi: ArnoldiConfig {
                seed: config.arnoldi.seed.wrapping_add(1),
                ..config.arnoldi
            },
            ..*config
        };
        result = shift_invert(pencil, nudged, count, &retry).map(|mut v| {
            sort_by_distance(&mut v, sigma);
            v
        });
    }
    match result {
        Err(Error::NoConvergence(_)) | Err(Error::SingularShift { .. }) if pencil.dim() <= config.dense_limit => {
            dense_near(pencil, sigma, count, config)
        }
        other => other,
    }
}

fn sort_by_distance(v: &mut [Resonance], sigma: Complex64) {
    v.sort_by(|a, b| {
        (a.lambda - sigma)
            .norm()
            .partial_cmp(&(b.lambda - sigma).norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
}

fn shift_invert(
    pencil: &SpectralPencil,
    sigma: Complex64,
    count: usize,
    config: &SolverConfig,
) -> Result<Vec<Resonance>> {
    let n = pencil.dim();
    let singular = || Error::SingularShift {
        re: sigma.re,
        im: sigma.im,
    };
    let lu = pencil.factor_shifted(sigma).ok_or_else(singular)?;
    if lu.pivot_ratio() < 1e-15 {
        return Err(singular());
    }
    let pos = &pencil.ops.position;
    let order = &pencil.ops.order;
    let mut sx = vec![Complex64::new(0.0, 0.0); n];
    let mut work = vec![Complex64::new(0.0, 0.0); n];
    let arnoldi = ArnoldiConfig {
        nev: count.min(n),
        ..config.arnoldi
    };
    let pairs = shift_invert_arnoldi(
        n,
        |x, y| {
            pencil.apply_rhs(x, &mut sx);
            for (i, v) in sx.iter().enumerate() {
                work[pos[i]] = *v;
            }
            lu.solve_in_place(&mut work);
            for (p, &i) in order.iter().enumerate() {
                y[i] = work[p];
            }
        },
        &arnoldi,
    )
    .map_err(Error::NoConvergence)?;

    let lambdas: Vec<Complex64> = pairs
        .iter()
        .map(|p| if p.theta.norm() == 0.0 { Complex64::new(f64::NAN, 0.0) } else { sigma + 1.0 / p.theta })
        .collect();
    let mut out = Vec::with_capacity(pairs.len());
    let mut worst_rejected: Option<(f64, f64)> = None;
    for (k, pair) in pairs.into_iter().enumerate() {
        let lambda = lambdas[k];
        if !lambda.re.is_finite() {
            continue;
        }
        let residual = pencil.relative_residual(lambda, &pair.vector);
        if residual > cluster_tolerance(config.residual_tol, lambda, &lambdas) {
            let dist = (lambda - sigma).norm();
            if worst_rejected.is_none_or(|(d, _)| dist < d) {
                worst_rejected = Some((dist, residual));
            }
            continue;
        }
        out.push(Resonance::new(lambda, pair.vector, pencil.dilation, residual));
    }
    sort_by_distance(&mut out, sigma);
    // unconverged outer Ritz pairs are dropped; the ones nearest the shift
    // must all be accurate
    let needed = count.min(n).min(2);
    let covered = out.len() >= needed
        && worst_rejected.is_none_or(|(d, _)| d > (out[needed - 1].lambda - sigma).norm());
    if !covered {
        return Err(Error::NoConvergence(match worst_rejected {
            Some((_, r)) => format!("residual {r:e} above {:e}", config.residual_tol),
            None => format!("{} of {count} resonances converged", out.len()),
        }));
    }
    Ok(out)
}

/// Residual gate for an eigenpair. The eigenvector of a nearly defective
/// pair is only determined to about rounding over the relative separation,
/// so the gate widens accordingly inside such a cluster.
fn cluster_tolerance(tol: f64, lambda: Complex64, all: &[Complex64]) -> f64 {
    let sep = all
        .iter()
        .filter(|&&l| l.re.is_finite() && l != lambda)
        .map(|l| (l - lambda).norm())
        .fold(f64::INFINITY, f64::min)
        / lambda.norm().max(1.0);
    tol.max(1e-13 / sep)
}

fn dense_near(
    pencil: &SpectralPencil,
    sigma: Complex64,
    count: usize,
    config: &SolverConfig,
) -> Result<Vec<Resonance>> {
    let eig = dense_generalized_eigen(&pencil.lhs_dense(), &pencil.rhs_dense())
        .ok_or_else(|| Error::NoConvergence("dense eigensolver failed".into()))?;
    let mut idx: Vec<usize> = (0..eig.values.len()).collect();
    idx.sort_by(|&a, &b| {
        (eig.values[a] - sigma)
            .norm()
            .partial_cmp(&(eig.values[b] - sigma).norm())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = Vec::new();
    for &k in idx.iter().take(count) {
        let v: Vec<Complex64> = eig.vectors.column(k).iter().copied().collect();
        let residual = pencil.relative_residual(eig.values[k], &v);
        if residual > config.residual_tol {
            return Err(Error::NoConvergence(format!("dense residual {residual:e}")));
        }
        out.push(Resonance::new(eig.values[k], v, pencil.dilation, residual));
    }
    Ok(out)
}

/// All eigenpairs of the pencil by dense decomposition, sorted by real
/// energy. Meant for small bases and as an independent check.
pub fn eigensolve_dense(pencil: &SpectralPencil) -> Result<Vec<Resonance>> {
    let eig = dense_generalized_eigen(&pencil.lhs_dense(), &pencil.rhs_dense())
        .ok_or_else(|| Error::NoConvergence("dense eigensolver failed".into()))?;
    let mut out: Vec<Resonance> = (0..eig.values.len())
        .map(|k| {
            let v: Vec<Complex64> = eig.vectors.column(k).iter().copied().collect();
            let residual = pencil.relative_residual(eig.values[k], &v);
            Resonance::new(eig.values[k], v, pencil.dilation, residual)
        })
        .collect();
    out.sort_by(|a, b| a.energy.re.partial_cmp(&b.energy.re).unwrap_or(std::cmp::Ordering::Equal));
    Ok(out)
}

/// The two resonances that coalesce at an exceptional point, with their sum
/// `kappa = E1 + E2` and squared difference `eta = (E1 - E2)^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonancePair {
    pub first: Resonance,
    pub second: Resonance,
    pub kappa: Complex64,
    pub eta: Complex64,
    /// Field point the pair was computed at.
    pub at: FieldPoint,
}

impl ResonancePair {
    pub fn new(first: Resonance, second: Resonance, at: FieldPoint) -> Self {
        let kappa = first.energy + second.energy;
        let d = first.energy - second.energy;
        Self {
            first,
            second,
            kappa,
            eta: d * d,
            at,
        }
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.second.clone(), self.first.clone(), self.at)
    }

    pub fn energy_gap(&self) -> f64 {
        (self.first.energy - self.second.energy).norm()
    }

    pub fn mean_energy(&self) -> Complex64 {
        self.kappa / 2.0
    }

    /// True when the two energies agree to `floor`.
    pub fn is_degenerate(&self, floor: f64) -> bool {
        self.energy_gap() <= floor
    }
}

/// Overlap diagnostics of a pair selection.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSelection {
    pub pair: ResonancePair,
    /// Fraction of each selected vector lying in the reference span.
    pub scores: [f64; 2],
    /// True when selection fell back to energy distance.
    pub by_energy: bool,
}

/// Overlap score below which selection falls back to energy distance.
const OVERLAP_FLOOR: f64 = 0.2;

/// Picks the two candidates that best continue the reference pair.
///
/// Membership is decided by the weight of each candidate inside the span
/// of the two reference eigenvectors (conjugating overlaps in coefficient
/// space). The bilinear c-product is unusable here because it vanishes for
/// the coalescing vectors near an exceptional point.
pub fn select_pair(candidates: &[Resonance], reference: &ResonancePair) -> Result<ResonancePair> {
    select_pair_scored(candidates, reference, reference.at).map(|s| s.pair)
}

pub fn select_pair_scored(
    candidates: &[Resonance],
    reference: &ResonancePair,
    at: FieldPoint,
) -> Result<PairSelection> {
    if candidates.len() < 2 {
        return Err(Error::InvalidInput("need at least two candidates".into()));
    }
    let r1 = &reference.first.coefficients;
    let r2 = &reference.second.coefficients;
    // orthonormal basis of the reference span
    let n1 = norm2(r1);
    let u1: Vec<Complex64> = r1.iter().map(|z| z / n1).collect();
    let c = dotc(&u1, r2);
    let mut u2: Vec<Complex64> = r2.iter().zip(&u1).map(|(a, b)| a - c * b).collect();
    let n2 = norm2(&u2);
    let has_second = n2 > 1e-8 * norm2(r2);
    if has_second {
        u2.iter_mut().for_each(|z| *z /= n2);
    }
    let scores: Vec<f64> = candidates
        .iter()
        .map(|cand| {
            let v = &cand.coefficients;
            let nv = norm2(v);
            let p1 = dotc(&u1, v).norm_sqr();
            let p2 = if has_second { dotc(&u2, v).norm_sqr() } else { 0.0 };
            (p1 + p2).sqrt() / nv
        })
        .collect();
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(std::cmp::Ordering::Equal));

    let (a, b, by_energy) = if scores[order[1]] < OVERLAP_FLOOR {
        let (a, b) = nearest_in_energy(candidates, reference);
        (a, b, true)
    } else {
        if order.len() > 2 && scores[order[2]] >= 0.99 * scores[order[1]] {
            return Err(Error::AmbiguousTracking {
                best: scores[order[1]],
                runner_up: scores[order[2]],
            });
        }
        (order[0], order[1], false)
    };

    // assign slots: first follows reference.first
    let (ca, cb) = (&candidates[a], &candidates[b]);
    let direct = dotc(r1, &ca.coefficients).norm() * dotc(r2, &cb.coefficients).norm();
    let crossed = dotc(r1, &cb.coefficients).norm() * dotc(r2, &ca.coefficients).norm();
    let keep = if (direct - crossed).abs() > 0.01 * direct.max(crossed) {
        direct >= crossed
    } else {
        let e1 = reference.first.energy;
        (ca.energy - e1).norm() <= (cb.energy - e1).norm()
    };
    let (first, second) = if keep { (ca, cb) } else { (cb, ca) };
    Ok(PairSelection {
        scores: [scores[if keep { a } else { b }], scores[if keep { b } else { a }]],
        pair: ResonancePair::new(first.clone(), second.clone(), at),
        by_energy,
    })
}

fn nearest_in_energy(candidates: &[Resonance], reference: &ResonancePair) -> (usize, usize) {
    let pick = |e: Complex64, skip: Option<usize>| {
        (0..candidates.len())
            .filter(|&i| Some(i) != skip)
            .min_by(|&i, &j| {
                (candidates[i].energy - e)
                    .norm()
                    .partial_cmp(&(candidates[j].energy - e).norm())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
            .unwrap()
    };
    let a = pick(reference.first.energy, None);
    let b = pick(reference.second.energy, Some(a));
    (a, b)
}

/// Bilinear (c-product) overlap `sum_i x_i y_i`.
pub fn c_overlap(x: &[Complex64], y: &[Complex64]) -> Complex64 {
    dotu(x, y)
}

/// Supplies resonance pairs at arbitrary field points. Implemented by the
/// full basis solver and by synthetic models.
pub trait PairSource: Sync {
    /// Pair nearest to an energy guess, used to start a search.
    fn seed_pair(&self, point: FieldPoint, energy_guess: Complex64) -> Result<ResonancePair>;

    /// Pair at `point` that continues `reference`.
    fn track_pair(&self, point: FieldPoint, reference: &ResonancePair) -> Result<ResonancePair>;

    /// Bilinear self-overlap `v^T S v` with the metric of the coefficient
    /// space, together with the Hermitian `v^H S v`. Their ratio vanishes
    /// for the coalescing eigenvector at an exceptional point.
    fn self_overlaps(&self, v: &[Complex64]) -> (Complex64, f64) {
        (dotu(v, v), norm2(v).powi(2))
    }
}

/// Resonance solver for a fixed basis and dilation.
#[derive(Debug, Clone)]
pub struct ResonanceSolver {
    ops: Arc<PencilOperators>,
    pub dilation: DilationParameter,
    pub config: SolverConfig,
    /// Tracking continues through intermediate points when the weakest
    /// overlap score falls below this value.
    pub min_track_score: f64,
    pub max_track_depth: usize,
}

impl ResonanceSolver {
    pub fn new(spec: BasisSpec, dilation: DilationParameter, config: SolverConfig) -> Self {
        Self::with_operators(Arc::new(PencilOperators::new(spec)), dilation, config)
    }

    pub fn with_operators(ops: Arc<PencilOperators>, dilation: DilationParameter, config: SolverConfig) -> Self {
        Self {
            ops,
            dilation,
            config,
            min_track_score: 0.9,
            max_track_depth: 6,
        }
    }

    pub fn operators(&self) -> &Arc<PencilOperators> {
        &self.ops
    }

    pub fn spec(&self) -> BasisSpec {
        self.ops.spec
    }

    pub fn pencil(&self, point: FieldPoint) -> SpectralPencil {
        SpectralPencil::with_operators(self.ops.clone(), point, self.dilation)
    }

    pub fn solve(&self, point: FieldPoint, target: Complex64) -> Result<Vec<Resonance>> {
        eigensolve_near(&self.pencil(point), target, self.config.count, &self.config)
    }

    fn track_direct(&self, point: FieldPoint, reference: &ResonancePair) -> Result<PairSelection> {
        let candidates = self.solve(point, reference.mean_energy())?;
        select_pair_scored(&candidates, reference, point)
    }

    fn track_recursive(&self, point: FieldPoint, reference: &ResonancePair, depth: usize) -> Result<ResonancePair> {
        let attempt = self.track_direct(point, reference);
        let weak = match &attempt {
            Ok(sel) => sel.by_energy || sel.scores[0].min(sel.scores[1]) < self.min_track_score,
            Err(Error::AmbiguousTracking { .. }) => true,
            Err(_) => false,
        };
        if !weak || depth >= self.max_track_depth {
            return attempt.map(|s| s.pair);
        }
        let mid = FieldPoint::new(
            0.5 * (reference.at.gamma + point.gamma),
            0.5 * (reference.at.f + point.f),
        );
        let half = self.track_recursive(mid, reference, depth + 1)?;
        self.track_recursive(point, &half, depth + 1)
    }
}

impl PairSource for ResonanceSolver {
    fn seed_pair(&self, point: FieldPoint, energy_guess: Complex64) -> Result<ResonancePair> {
        let res = self.solve(point, energy_guess)?;
        if res.len() < 2 {
            return Err(Error::NoConvergence("fewer than two resonances".into()));
        }
        let mut two = [res[0].clone(), res[1].clone()];
        two.sort_by(|a, b| b.energy.re.partial_cmp(&a.energy.re).unwrap_or(std::cmp::Ordering::Equal));
        let [a, b] = two;
        Ok(ResonancePair::new(a, b, point))
    }

    fn track_pair(&self, point: FieldPoint, reference: &ResonancePair) -> Result<ResonancePair> {
        self.track_recursive(point, reference, 0)
    }

    fn self_overlaps(&self, v: &[Complex64]) -> (Complex64, f64) {
        let mut sv = vec![Complex64::new(0.0, 0.0); v.len()];
        self.ops.overlap().mul_add(Complex64::new(1.0, 0.0), v, &mut sv);
        (dotu(v, &sv), dotc(v, &sv).re)
    }
}

/// Chooses among candidate rotation angles the one whose resonance nearest
/// to `target` moves least when the angle changes.
pub fn select_rotation_angle(
    ops: &Arc<PencilOperators>,
    point: FieldPoint,
    modulus: f64,
    target: Complex64,
    angles: &[f64],
    config: &SolverConfig,
) -> Result<f64> {
    if angles.is_empty() {
        return Err(Error::InvalidInput("no candidate angles".into()));
    }
    let mut energies = Vec::with_capacity(angles.len());
    for &angle in angles {
        let dil = DilationParameter::new(modulus, angle)?;
        let pencil = SpectralPencil::with_operators(ops.clone(), point, dil);
        let res = eigensolve_near(&pencil, target, 1, config)?;
        energies.push(res[0].energy);
    }
    let sensitivity = |i: usize| -> f64 {
        (0..energies.len())
            .filter(|&j| j != i)
            .map(|j| (energies[i] - energies[j]).norm())
            .fold(f64::INFINITY, f64::min)
    };
    Ok((0..angles.len())
        .min_by(|&a, &b| sensitivity(a).partial_cmp(&sensitivity(b)).unwrap_or(std::cmp::Ordering::Equal))
        .map(|i| angles[i])
        .unwrap())
}
