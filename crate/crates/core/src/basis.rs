//! Two-dimensional harmonic-oscillator basis `|n, m>` and the radial
//! operators needed for the semiparabolic eigenproblem.
//!
//! Radial functions are normalized as
//! `R_n(rho) = sqrt(2 n!/(n+|m|)!) exp(-rho^2/2) rho^|m| L_n^|m|(rho^2)` so that
//! `int R_n R_k rho drho = delta_nk`. The position-space basis state is
//! `R_{n_mu}(mu) R_{n_nu}(nu) exp(i m phi) / sqrt(2 pi)`.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BasisSpec {
    /// Product truncation `n_mu + n_nu <= n_max`.
    pub n_max: usize,
    /// Magnetic quantum number, fixed per run.
    pub m: i32,
}

impl BasisSpec {
    pub fn new(n_max: usize, m: i32) -> Self {
        Self { n_max, m }
    }

    pub fn abs_m(&self) -> usize {
        self.m.unsigned_abs() as usize
    }

    /// Number of product states.
    pub fn dim(&self) -> usize {
        (self.n_max + 1) * (self.n_max + 2) / 2
    }

    /// The same spec with a larger per-oscillator range.
    pub fn enlarged(&self, by: usize) -> Self {
        Self::new(self.n_max + by, self.m)
    }
}

/// Oscillator eigenvalues `2 n + |m| + 1` for `n = 0..=n_max`.
pub fn h0_diagonal(spec: BasisSpec) -> Vec<f64> {
    let am = spec.abs_m() as f64;
    (0..=spec.n_max).map(|n| 2.0 * n as f64 + am + 1.0).collect()
}

/// A symmetric banded matrix of `rho^power` over `n = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialOperator {
    power: u32,
    size: usize,
    entries: Vec<f64>,
}

impl RadialOperator {
    /// `rho^0`, the identity on `size` radial states.
    pub fn identity(size: usize) -> Self {
        let mut entries = vec![0.0; size * size];
        for n in 0..size {
            entries[n * size + n] = 1.0;
        }
        Self {
            power: 0,
            size,
            entries,
        }
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    pub fn bandwidth(&self) -> usize {
        self.power as usize / 2
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, n: usize, k: usize) -> f64 {
        self.entries[n * self.size + k]
    }

    fn set_sym(&mut self, n: usize, k: usize, v: f64) {
        self.entries[n * self.size + k] = v;
        self.entries[k * self.size + n] = v;
    }

    /// Nonzero `(n, k, value)` triples inside the band.
    pub fn band_entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let w = self.bandwidth();
        (0..self.size).flat_map(move |n| {
            let lo = n.saturating_sub(w);
            let hi = (n + w).min(self.size - 1);
            (lo..=hi).map(move |k| (n, k, self.get(n, k)))
        })
    }

    /// Restricts to the leading `size x size` block.
    pub fn truncated(&self, size: usize) -> RadialOperator {
        let mut out = RadialOperator {
            power: self.power,
            size,
            entries: vec![0.0; size * size],
        };
        for n in 0..size {
            for k in 0..size {
                out.entries[n * size + k] = self.get(n, k);
            }
        }
        out
    }

    /// Plain matrix product restricted to `self`'s size.
    pub fn squared(&self) -> RadialOperator {
        let s = self.size;
        let mut entries = vec![0.0; s * s];
        for n in 0..s {
            for k in 0..s {
                entries[n * s + k] = (0..s).map(|j| self.get(n, j) * self.get(j, k)).sum();
            }
        }
        RadialOperator {
            power: 2 * self.power,
            size: s,
            entries,
        }
    }
}

/// `<n+1|rho^2|n>` from the Laguerre three-term recurrence.
fn rho2_offdiag(n: usize, am: usize) -> f64 {
    -(((n + 1) * (n + am + 1)) as f64).sqrt()
}

fn rho2_diag(n: usize, am: usize) -> f64 {
    (2 * n + am + 1) as f64
}

/// Matrix of `rho^2` (power 2) or `rho^4` (power 4) in closed form.
pub fn radial_power_matrix(spec: BasisSpec, power: u32) -> Result<RadialOperator> {
    let size = spec.n_max + 1;
    let am = spec.abs_m();
    let mut op = RadialOperator {
        power,
        size,
        entries: vec![0.0; size * size],
    };
    match power {
        2 => {
            for n in 0..size {
                op.set_sym(n, n, rho2_diag(n, am));
                if n + 1 < size {
                    op.set_sym(n, n + 1, rho2_offdiag(n, am));
                }
            }
        }
        4 => {
            // rho^4 = (rho^2)^2 on the untruncated ladder
            for n in 0..size {
                let below = if n > 0 { rho2_offdiag(n - 1, am) } else { 0.0 };
                let above = rho2_offdiag(n, am);
                let d = rho2_diag(n, am);
                op.set_sym(n, n, below * below + d * d + above * above);
                if n + 1 < size {
                    op.set_sym(n, n + 1, above * (d + rho2_diag(n + 1, am)));
                }
                if n + 2 < size {
                    op.set_sym(n, n + 2, above * rho2_offdiag(n + 1, am));
                }
            }
        }
        p => {
            return Err(Error::InvalidInput(format!(
                "radial power must be 2 or 4, got {p}"
            )))
        }
    }
    Ok(op)
}

/// Bijection between `(n_mu, n_nu)` with `n_mu + n_nu <= n_max` and a
/// linear index. States are ordered shell by shell (`n_mu + n_nu` major),
/// with `n_mu` descending inside each shell.
#[derive(Debug, Clone)]
pub struct BasisIndex {
    spec: BasisSpec,
    states: Vec<(usize, usize)>,
}

impl BasisIndex {
    pub fn new(spec: BasisSpec) -> Self {
        let mut states = Vec::with_capacity(spec.dim());
        for shell in 0..=spec.n_max {
            for n_nu in 0..=shell {
                states.push((shell - n_nu, n_nu));
            }
        }
        Self { spec, states }
    }

    pub fn spec(&self) -> BasisSpec {
        self.spec
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, index: usize) -> (usize, usize) {
        self.states[index]
    }

    pub fn states(&self) -> &[(usize, usize)] {
        &self.states
    }

    pub fn index(&self, n_mu: usize, n_nu: usize) -> Option<usize> {
        let shell = n_mu + n_nu;
        (shell <= self.spec.n_max).then(|| shell * (shell + 1) / 2 + n_nu)
    }
}

pub fn basis_index_map(spec: BasisSpec) -> BasisIndex {
    BasisIndex::new(spec)
}
