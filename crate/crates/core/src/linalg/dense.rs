use nalgebra::{linalg::Schur, DMatrix, DVector};
use num_complex::Complex64;

/// Eigenvalues with right eigenvectors stored as columns.
#[derive(Debug, Clone)]
pub struct DenseEigen {
    pub values: Vec<Complex64>,
    pub vectors: DMatrix<Complex64>,
}

/// Eigen-decomposition of a general complex matrix through its Schur form.
pub fn dense_eigen(m: DMatrix<Complex64>) -> Option<DenseEigen> {
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    // the deflation test of the QR sweep can stall at machine precision on
    // nearly defective matrices; retry with a slightly looser threshold
    let (q, t) = [1.0, 16.0, 256.0]
        .iter()
        .find_map(|f| Schur::try_new(m.clone(), f * f64::EPSILON, 300 * n.max(10)))?
        .unpack();
    let values: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();
    let mut y = DMatrix::<Complex64>::zeros(n, n);
    let floor = f64::EPSILON * scale;
    for k in 0..n {
        y[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let s: Complex64 = (i + 1..=k).map(|j| t[(i, j)] * y[(j, k)]).sum();
            let mut d = t[(i, i)] - t[(k, k)];
            if d.norm() < floor {
                d = Complex64::new(floor, 0.0);
            }
            y[(i, k)] = -s / d;
        }
    }
    let mut vectors = q * y;
    for mut col in vectors.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= Complex64::new(nrm, 0.0);
        }
    }
    Some(DenseEigen { values, vectors })
}

/// Solves `A v = lambda S v` for complex `A` and real symmetric positive
/// definite `S` by Cholesky reduction. Returns `None` when `S` is not
/// positive definite or the Schur iteration fails.
pub fn dense_generalized_eigen(a: &DMatrix<Complex64>, s: &DMatrix<f64>) -> Option<DenseEigen> {
    let n = a.nrows();
    let chol = nalgebra::Cholesky::new(s.clone())?;
    let l = chol.l().map(|x| Complex64::new(x, 0.0));
    let lt = l.transpose();
    // C = L^-1 A L^-T
    let mut tmp = a.clone();
    if !l.solve_lower_triangular_mut(&mut tmp) {
        return None;
    }
    let mut c = tmp.transpose();
    if !l.solve_lower_triangular_mut(&mut c) {
        return None;
    }
    let c = c.transpose();
    let mut eig = dense_eigen(c)?;
    for k in 0..n {
        let mut x: DVector<Complex64> = eig.vectors.column(k).into_owned();
        if !lt.solve_upper_triangular_mut(&mut x) {
            return None;
        }
        let nrm = x.norm();
        eig.vectors.set_column(k, &(x / Complex64::new(nrm, 0.0)));
    }
    Some(eig)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triangular_eigenvectors() {
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 1.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(3.0, -1.0),
            ],
        );
        let eig = dense_eigen(m.clone()).unwrap();
        for k in 0..2 {
            let v = eig.vectors.column(k);
            let r = &m * v - v * eig.values[k];
            assert!(r.norm() < 1e-12);
        }
    }

    #[test]
    fn generalized_residual() {
        let n = 6;
        let a = DMatrix::from_fn(n, n, |i, j| {
            let k = (i + j) as f64;
            Complex64::new((k * 0.7).sin(), 0.1 * (k * 0.3).cos())
        });
        let a = &a + a.transpose();
        let s = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 + i as f64 } else { 0.3 / (1.0 + (i + j) as f64) });
        let eig = dense_generalized_eigen(&a, &s).unwrap();
        let sc = s.map(|x| Complex64::new(x, 0.0));
        for k in 0..n {
            let v = eig.vectors.column(k);
            let r = &a * v - &sc * v * eig.values[k];
            assert!(r.norm() < 1e-10, "{}", r.norm());
        }
    }
}
