use num_complex::Complex64;

/// LU factorization with partial pivoting of a complex band matrix with
/// `kl` sub- and `ku` super-diagonals. Row pivoting widens the upper band of
/// `U` to `kl + ku`.
#[derive(Debug, Clone)]
pub struct BandLu {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    // row r holds columns r-kl ..= r+kl+ku
    rows: Vec<Complex64>,
    lower: Vec<Complex64>,
    pivots: Vec<usize>,
    pivot_ratio: f64,
}

impl BandLu {
    /// Factorizes the matrix given by `entries` (row, col, value); entries
    /// outside the declared band are rejected with `None`. Returns `None` as
    /// well when a zero pivot is met.
    pub fn factor<I>(n: usize, kl: usize, ku: usize, entries: I) -> Option<Self>
    where
        I: IntoIterator<Item = (usize, usize, Complex64)>,
    {
        let width = 2 * kl + ku + 1;
        let mut rows = vec![Complex64::new(0.0, 0.0); n * width];
        for (r, c, v) in entries {
            if c + kl < r || c > r + ku {
                return None;
            }
            rows[r * width + (c + kl - r)] += v;
        }
        let mut lower = vec![Complex64::new(0.0, 0.0); n * kl.max(1)];
        let mut pivots = vec![0usize; n];
        let mut max_piv = 0.0f64;
        let mut min_piv = f64::INFINITY;

        for k in 0..n {
            let last_row = (k + kl).min(n - 1);
            let last_col = (k + kl + ku).min(n - 1);
            let mut p = k;
            let mut best = rows[k * width + kl].norm();
            for r in k + 1..=last_row {
                let v = rows[r * width + (k + kl - r)].norm();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            pivots[k] = p;
            if !(best > 0.0) || !best.is_finite() {
                return None;
            }
            max_piv = max_piv.max(best);
            min_piv = min_piv.min(best);
            if p != k {
                for c in k..=last_col {
                    rows.swap(k * width + (c + kl - k), p * width + (c + kl - p));
                }
            }
            let pivot = rows[k * width + kl];
            let span = last_col - k;
            let (head, tail) = rows.split_at_mut((k + 1) * width);
            let pivot_row = &head[k * width + kl + 1..k * width + kl + 1 + span];
            for r in k + 1..=last_row {
                let base = (r - k - 1) * width;
                let off = k + kl - r;
                let m = tail[base + off] / pivot;
                lower[k * kl + (r - k - 1)] = m;
                tail[base + off] = Complex64::new(0.0, 0.0);
                if m.re == 0.0 && m.im == 0.0 {
                    continue;
                }
                let target = &mut tail[base + off + 1..base + off + 1 + span];
                for (t, &u) in target.iter_mut().zip(pivot_row) {
                    *t -= m * u;
                }
            }
        }
        Some(Self {
            n,
            kl,
            ku,
            width,
            rows,
            lower,
            pivots,
            pivot_ratio: if max_piv > 0.0 { min_piv / max_piv } else { 0.0 },
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Smallest over largest pivot magnitude, a cheap conditioning hint.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// Solves `M x = b` in place.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let (n, kl, w) = (self.n, self.kl, self.width);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                b.swap(k, p);
            }
            let bk = b[k];
            if bk.re == 0.0 && bk.im == 0.0 {
                continue;
            }
            let last = (k + kl).min(n - 1);
            for r in k + 1..=last {
                b[r] -= self.lower[k * kl + (r - k - 1)] * bk;
            }
        }
        for k in (0..n).rev() {
            let last = (k + kl + self.ku).min(n - 1);
            let row = &self.rows[k * w + kl..k * w + kl + (last - k) + 1];
            let mut s = b[k];
            for (u, x) in row[1..].iter().zip(&b[k + 1..=last]) {
                s -= u * x;
            }
            b[k] = s / row[0];
        }
    }
}
