//! Position-space densities in real semiparabolic coordinates.
//!
//! A basis state is `R_a(mu) R_b(nu) e^{i m phi} / sqrt(2 pi)` with
//! `R_n(rho) = sqrt(2 n! / (n+|m|)!) e^{-rho^2/2} rho^|m| L_n^|m|(rho^2)`,
//! evaluated at the complex coordinates `mu = mu_r / b`, `nu = nu_r / b`.
//! Only the angular factor is conjugated in `Psi*`, so the density is
//! `|Psi* Psi| = |psi(mu, nu)^2| / (2 pi)`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{BasisIndex, BasisSpec};
use crate::linalg::SparseMatrix;
use crate::spectral::{c_overlap, DilationParameter, PencilOperators};
use crate::{Error, Result};

/// `e^{-t/2} sqrt(n! / (n+m)!) L_n^m(t)` for `n = 0..=n_max`, by the
/// three-term recurrence carried out on the scaled values.
pub fn scaled_laguerre(n_max: usize, m: usize, t: Complex64) -> Vec<Complex64> {
    let mut out = Vec::with_capacity(n_max + 1);
    // sqrt(1/m!) e^{-t/2}
    let inv_fact: f64 = (1..=m).map(|k| 1.0 / k as f64).product();
    let mut cur = (-t / 2.0).exp() * inv_fact.sqrt();
    let mut prev = Complex64::new(0.0, 0.0);
    out.push(cur);
    for n in 0..n_max {
        let nf = n as f64;
        let mf = m as f64;
        let next = ((2.0 * nf + 1.0 + mf - t) * cur - (nf * (nf + mf)).sqrt() * prev)
            / ((nf + 1.0) * (nf + 1.0 + mf)).sqrt();
        prev = cur;
        cur = next;
        out.push(cur);
    }
    out
}

/// Normalized radial functions `R_n(rho)`, `n = 0..=n_max`.
pub fn radial_functions(n_max: usize, m: usize, rho: Complex64) -> Vec<Complex64> {
    let pre = 2f64.sqrt() * rho.powu(m as u32);
    scaled_laguerre(n_max, m, rho * rho).into_iter().map(|l| pre * l).collect()
}

/// Rectangular grid of real coordinates `mu_r`, `nu_r`, both starting at 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub mu_max: f64,
    pub nu_max: f64,
    pub mu_points: usize,
    pub nu_points: usize,
    pub phi: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            mu_max: 60.0,
            nu_max: 60.0,
            mu_points: 256,
            nu_points: 256,
            phi: 0.0,
        }
    }
}

impl GridSpec {
    pub fn mu_values(&self) -> Vec<f64> {
        axis(self.mu_max, self.mu_points)
    }

    pub fn nu_values(&self) -> Vec<f64> {
        axis(self.nu_max, self.nu_points)
    }
}

fn axis(max: f64, n: usize) -> Vec<f64> {
    if n <= 1 {
        return vec![0.0; n];
    }
    (0..n).map(|i| max * i as f64 / (n - 1) as f64).collect()
}

/// `Psi` and `Psi*` on a grid, row-major with `mu` as the slow index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateField {
    pub psi: Vec<Complex64>,
    pub psi_star: Vec<Complex64>,
}

/// Expands `coefficients` (basis-index order) on the grid.
pub fn evaluate_state(
    coefficients: &[Complex64],
    spec: BasisSpec,
    dilation: DilationParameter,
    grid: &GridSpec,
) -> Result<StateField> {
    let index = BasisIndex::new(spec);
    if coefficients.len() != index.len() {
        return Err(Error::InvalidInput(format!(
            "{} coefficients for a basis of dimension {}",
            coefficients.len(),
            index.len()
        )));
    }
    let size = spec.n_max + 1;
    let m = spec.abs_m();
    let b = dilation.value();
    let radial = |values: Vec<f64>| -> Vec<Vec<Complex64>> {
        values
            .into_iter()
            .map(|r| radial_functions(spec.n_max, m, Complex64::new(r, 0.0) / b))
            .collect()
    };
    let rmu = radial(grid.mu_values());
    let rnu = radial(grid.nu_values());
    // coefficient matrix c[a][b]
    let mut cmat = vec![Complex64::new(0.0, 0.0); size * size];
    for (k, &(a, bb)) in index.states().iter().enumerate() {
        cmat[a * size + bb] = coefficients[k];
    }
    let angular = Complex64::from_polar(1.0, spec.m as f64 * grid.phi) / (2.0 * std::f64::consts::PI).sqrt();
    let psi: Vec<Complex64> = rmu
        .par_iter()
        .flat_map_iter(|ra| {
            // t[b] = sum_a c[a][b] R_a(mu)
            let mut t = vec![Complex64::new(0.0, 0.0); size];
            for (a, &r) in ra.iter().enumerate() {
                for (tb, &c) in t.iter_mut().zip(&cmat[a * size..(a + 1) * size]) {
                    *tb += c * r;
                }
            }
            rnu.iter()
                .map(move |rb| rb.iter().zip(&t).map(|(x, y)| x * y).sum::<Complex64>())
                .collect::<Vec<_>>()
        })
        .collect();
    let psi_star = psi.iter().map(|p| p * angular.conj()).collect();
    let psi = psi.iter().map(|p| p * angular).collect();
    Ok(StateField { psi, psi_star })
}

/// Densities of one or more states on a common grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveGrid {
    pub mu_values: Vec<f64>,
    pub nu_values: Vec<f64>,
    pub phi: f64,
    /// One array per state, row-major with `mu` as the slow index.
    pub densities: Vec<Vec<f64>>,
}

impl WaveGrid {
    pub fn at(&self, state: usize, i_mu: usize, i_nu: usize) -> f64 {
        self.densities[state][i_mu * self.nu_values.len() + i_nu]
    }

    pub fn peak(&self, state: usize) -> f64 {
        self.densities[state].iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance from the origin of the `(mu_r, nu_r)` plane that
    /// encloses `fraction` of the summed density.
    pub fn extent(&self, state: usize, fraction: f64) -> f64 {
        let nn = self.nu_values.len();
        let mut cells: Vec<(f64, f64)> = self.densities[state]
            .iter()
            .enumerate()
            .map(|(k, &d)| (self.mu_values[k / nn].hypot(self.nu_values[k % nn]), d))
            .collect();
        cells.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));
        let total: f64 = cells.iter().map(|c| c.1).sum();
        let mut acc = 0.0;
        for (r, d) in cells {
            acc += d;
            if acc >= fraction * total {
                return r;
            }
        }
        0.0
    }
}

/// `|Psi* Psi|` for each coefficient vector.
pub fn density_grid(
    states: &[&[Complex64]],
    spec: BasisSpec,
    dilation: DilationParameter,
    grid: &GridSpec,
) -> Result<WaveGrid> {
    let densities = states
        .iter()
        .map(|v| {
            let field = evaluate_state(v, spec, dilation, grid)?;
            Ok(field.psi.iter().zip(&field.psi_star).map(|(a, b)| (a * b).norm()).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    Ok(WaveGrid {
        mu_values: grid.mu_values(),
        nu_values: grid.nu_values(),
        phi: grid.phi,
        densities,
    })
}

/// `(v1 + v2) / 2` after turning `v2` onto `v1`. The phase is taken from
/// the Hermitian overlap: the bilinear one vanishes for nearly coalesced
/// vectors and cannot fix a phase there.
pub fn averaged_vector(v1: &[Complex64], v2: &[Complex64]) -> Result<Vec<Complex64>> {
    if v1.len() != v2.len() {
        return Err(Error::InvalidInput("vectors differ in length".into()));
    }
    let overlap: Complex64 = v1.iter().zip(v2).map(|(a, b)| a.conj() * b).sum();
    let n1: f64 = v1.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let n2: f64 = v2.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(overlap.norm() > 1e-8 * n1 * n2) {
        return Err(Error::GaugeMismatch);
    }
    let phase = overlap.conj() / overlap.norm();
    Ok(v1.iter().zip(v2).map(|(a, b)| (a + phase * b) / 2.0).collect())
}

fn overlap_matrix(spec: BasisSpec) -> SparseMatrix {
    PencilOperators::new(spec).overlap().clone()
}

/// `v^T S v`, the bilinear norm with the semiparabolic volume weight
/// `mu^2 + nu^2`. It vanishes for the coalescing state at an exceptional
/// point.
pub fn c_norm(v: &[Complex64], spec: BasisSpec) -> Result<Complex64> {
    let s = overlap_matrix(spec);
    if v.len() != s.dim() {
        return Err(Error::InvalidInput(format!("{} coefficients for dimension {}", v.len(), s.dim())));
    }
    let mut sv = vec![Complex64::new(0.0, 0.0); v.len()];
    s.mul_add(Complex64::new(1.0, 0.0), v, &mut sv);
    Ok(c_overlap(v, &sv))
}

/// `v / sqrt(v^T S v)`. Diverges as the state approaches an exceptional
/// point.
pub fn c_normalized(v: &[Complex64], spec: BasisSpec) -> Result<Vec<Complex64>> {
    let c = c_norm(v, spec)?;
    if c.norm() == 0.0 {
        return Err(Error::InvalidInput("state has vanishing c-norm".into()));
    }
    let k = c.sqrt().inv();
    Ok(v.iter().map(|z| z * k).collect())
}
