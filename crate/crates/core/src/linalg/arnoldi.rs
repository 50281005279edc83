use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{dense::dense_eigen, dotc, norm2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArnoldiConfig {
    /// Number of wanted eigenpairs (largest `|theta|`).
    pub nev: usize,
    /// Initial Krylov subspace size; doubled on every restart up to four
    /// times its initial value.
    pub ncv: usize,
    /// Number of start vectors. Eigenvalues of multiplicity up to the block
    /// size are resolved with all their eigenvectors.
    pub block: usize,
    pub max_restarts: usize,
    /// Relative Ritz-estimate tolerance on `theta`.
    pub tol: f64,
    /// Seed of the start vectors.
    pub seed: u64,
}

impl Default for ArnoldiConfig {
    fn default() -> Self {
        Self {
            nev: 8,
            ncv: 48,
            block: 4,
            max_restarts: 5,
            tol: 1e-12,
            seed: 0x5eed,
        }
    }
}

/// A Ritz pair of the iteration operator.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub theta: Complex64,
    pub vector: Vec<Complex64>,
    pub estimate: f64,
}

/// Orthogonalizes `w` against `basis` twice, accumulating coefficients.
fn orthogonalize(basis: &[Vec<Complex64>], w: &mut [Complex64], coeffs: &mut [Complex64]) {
    for _pass in 0..2 {
        for (i, v) in basis.iter().enumerate() {
            let c = dotc(v, w);
            coeffs[i] += c;
            for (wk, vk) in w.iter_mut().zip(v) {
                *wk -= c * vk;
            }
        }
    }
}

/// Band (block) Arnoldi iteration for the eigenvalues of largest modulus of
/// `op`, which is expected to apply `(A - sigma S)^-1 S`. Each new basis
/// vector is `op` applied to the vector `block` positions back, so the
/// projected matrix is banded upper Hessenberg. Restarts use the sum of the
/// unconverged wanted Ritz vectors plus fresh random vectors, with a doubled
/// subspace.
pub fn shift_invert_arnoldi<F>(
    n: usize,
    mut op: F,
    config: &ArnoldiConfig,
) -> Result<Vec<EigenPair>, String>
where
    F: FnMut(&[Complex64], &mut [Complex64]),
{
    if n == 0 {
        return Ok(Vec::new());
    }
    let zero = Complex64::new(0.0, 0.0);
    let nev = config.nev.min(n);
    let p = config.block.clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let random_vector = |rng: &mut ChaCha8Rng| -> Vec<Complex64> {
        (0..n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect()
    };
    let mut starts: Vec<Vec<Complex64>> = (0..p).map(|_| random_vector(&mut rng)).collect();
    let mut m = config.ncv.max(2 * nev + p).min(n);

    for _restart in 0..=config.max_restarts {
        let mut basis: Vec<Vec<Complex64>> = Vec::with_capacity(m + p);
        for s in &starts {
            let mut w = s.clone();
            let mut scratch = vec![zero; basis.len()];
            orthogonalize(&basis, &mut w, &mut scratch);
            let mut nrm = norm2(&w);
            while !(nrm > 1e-8) {
                w = random_vector(&mut rng);
                scratch.iter_mut().for_each(|c| *c = zero);
                orthogonalize(&basis, &mut w, &mut scratch);
                nrm = norm2(&w);
            }
            basis.push(w.iter().map(|z| z / nrm).collect());
            if basis.len() == n {
                break;
            }
        }
        let p_eff = basis.len();
        let mut h = DMatrix::<Complex64>::zeros(m + p_eff, m);
        let mut w = vec![zero; n];
        let mut steps = m;
        for k in 0..m {
            op(&basis[k], &mut w);
            if w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err("operator produced non-finite values".into());
            }
            let wnorm0 = norm2(&w);
            let mut coeffs = vec![zero; basis.len()];
            orthogonalize(&basis, &mut w, &mut coeffs);
            for (i, c) in coeffs.iter().enumerate() {
                h[(i, k)] = *c;
            }
            if basis.len() == n {
                // the basis spans the whole space
                steps = k + 1;
                if steps == n {
                    break;
                }
                continue;
            }
            let beta = norm2(&w);
            if beta <= 1e-13 * wnorm0.max(f64::MIN_POSITIVE) {
                // deflate: continue with a fresh direction
                let mut fresh = random_vector(&mut rng);
                let mut scratch = vec![zero; basis.len()];
                orthogonalize(&basis, &mut fresh, &mut scratch);
                let nf = norm2(&fresh);
                basis.push(fresh.iter().map(|z| z / nf).collect());
            } else {
                h[(basis.len(), k)] = Complex64::new(beta, 0.0);
                basis.push(w.iter().map(|z| z / beta).collect());
            }
        }

        let hm = h.view((0, 0), (steps, steps)).into_owned();
        let eig = dense_eigen(hm).ok_or("Ritz problem failed")?;
        let mut order: Vec<usize> = (0..steps).collect();
        order.sort_by(|&a, &b| {
            eig.values[b]
                .norm()
                .partial_cmp(&eig.values[a].norm())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let wanted = &order[..nev.min(steps)];
        let tail_rows = h.rows(steps, h.nrows() - steps).columns(0, steps).into_owned();
        let estimates: Vec<f64> = wanted
            .iter()
            .map(|&k| {
                let y = eig.vectors.column(k);
                (&tail_rows * y).norm() / eig.values[k].norm().max(f64::MIN_POSITIVE)
            })
            .collect();
        let ritz = |k: usize| -> Vec<Complex64> {
            let mut x = vec![zero; n];
            for (i, v) in basis.iter().enumerate().take(steps) {
                let y = eig.vectors[(i, k)];
                for (xk, vk) in x.iter_mut().zip(v) {
                    *xk += y * vk;
                }
            }
            x
        };
        let converged = estimates.iter().all(|&e| e <= config.tol) || steps >= n;
        if converged {
            return Ok(wanted
                .iter()
                .zip(&estimates)
                .map(|(&k, &e)| EigenPair {
                    theta: eig.values[k],
                    vector: ritz(k),
                    estimate: e,
                })
                .collect());
        }
        let mut combined = vec![zero; n];
        for (&k, &e) in wanted.iter().zip(&estimates) {
            if e > config.tol {
                for (s, x) in combined.iter_mut().zip(ritz(k)) {
                    *s += x;
                }
            }
        }
        starts = std::iter::once(combined)
            .chain((1..p).map(|_| random_vector(&mut rng)))
            .collect();
        m = (2 * m).min(4 * config.ncv.max(2 * nev + p)).min(n);
    }
    Err(format!(
        "no convergence after {} restarts",
        config.max_restarts
    ))
}
