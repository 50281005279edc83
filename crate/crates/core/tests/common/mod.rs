//! Oracle checks shared by the acceptance run and the individual test files.
//! Each check returns a verdict with a one-line summary of what it measured.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rydberg_ep::basis::{radial_power_matrix, BasisSpec};
use rydberg_ep::linalg::ArnoldiConfig;
use rydberg_ep::octagon::{ep_candidate, fit_coefficients, sample_octagon, ModelCoefficients};
use rydberg_ep::search::{find_ep_with, SearchOptions};
use rydberg_ep::spectral::{DilationParameter, ResonanceSolver, SolverConfig};
use rydberg_ep::synthetic::PlantedModel;
use rydberg_ep::units::{material_constants, reduced_to_si, Material, ELEMENTARY_CHARGE};
use rydberg_ep::verification::{certify, LoopDiscretization};
use rydberg_ep::FieldPoint;

#[derive(Debug, Clone)]
pub struct Verdict {
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    pub fn new(passed: bool, detail: impl Into<String>) -> Self {
        Self {
            passed,
            detail: detail.into(),
        }
    }
}

pub const COULOMB_TOL: f64 = 1e-8;

/// Field-free spectrum at real `b`: the eight lowest levels and their
/// multiplicities.
pub fn coulomb_levels(n_max: usize) -> Verdict {
    let dilation = DilationParameter::new(2.0, 0.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut problems = Vec::new();
    let mut found: Vec<f64> = Vec::new();
    for n in 1..=8usize {
        let exact = -0.5 / (n * n) as f64;
        let count = n + 2;
        let config = SolverConfig {
            count,
            arnoldi: ArnoldiConfig {
                block: count,
                ..Default::default()
            },
            ..Default::default()
        };
        let solver = ResonanceSolver::new(BasisSpec::new(n_max, 0), dilation, config);
        let res = match solver.solve(FieldPoint::default(), Complex64::new(exact * (1.0 + 1e-4), 0.0)) {
            Ok(r) => r,
            Err(e) => return Verdict::new(false, format!("solve near n = {n} failed: {e}")),
        };
        let hits: Vec<f64> = res
            .iter()
            .map(|r| r.energy)
            .filter(|e| (e - exact).norm() < 1e-6)
            .map(|e| (e - exact).norm())
            .collect();
        worst = hits.iter().copied().fold(worst, f64::max);
        if hits.len() != n {
            problems.push(format!("n = {n}: {} states", hits.len()));
        }
        found.extend(res.iter().map(|r| r.energy.re));
    }
    // nothing else below midway to the n = 9 level
    let floor = -0.5 / 72.25;
    let stray = found
        .iter()
        .filter(|&&e| e < floor)
        .filter(|&&e| (1..=8).all(|n| (e + 0.5 / (n * n) as f64).abs() > 1e-6))
        .count();
    if stray > 0 {
        problems.push(format!("{stray} stray levels"));
    }
    let passed = problems.is_empty() && worst <= COULOMB_TOL;
    Verdict::new(
        passed,
        format!(
            "n_max {n_max}: max |E + 1/(2n^2)| = {worst:.2e} (tol {COULOMB_TOL:.0e}), multiplicities {}",
            if problems.is_empty() { "1..8 as expected".to_string() } else { problems.join(", ") }
        ),
    )
}

/// Unit table entries as printed, and the two field conversions quoted for
/// `gamma = 3e-3`.
pub fn unit_tables() -> Verdict {
    let h = material_constants(Material::Hydrogen);
    let c = material_constants(Material::CuprousOxide);
    let literal = [
        (h.energy_unit, 4.359744e-18),
        (h.length_unit, 0.529177e-10),
        (h.electric_unit, 5.142206e11),
        (h.magnetic_unit, 2.350517e5),
        (c.energy_unit, 2.945e-20),
        (c.length_unit, 1.044e-9),
        (c.electric_unit, 1.760e8),
        (c.magnetic_unit, 6.034e2),
    ];
    let exact = literal.iter().all(|(a, b)| a == b);
    let p = FieldPoint::new(3e-3, 0.0);
    let bh = reduced_to_si(Material::Hydrogen, p, Complex64::default()).tesla;
    let bc = reduced_to_si(Material::CuprousOxide, p, Complex64::default()).tesla;
    let three = |x: f64, want: f64| ((x - want) / want).abs() < 0.5 * 10f64.powi(-2);
    let passed = exact && three(bh, 705.0) && three(bc, 1.81);
    Verdict::new(
        passed,
        format!("8/8 table entries literal = {exact}; gamma 3e-3 -> {bh:.1} T (H), {bc:.3} T (Cu2O)"),
    )
}

/// The seven rows of found exceptional points: hydrogen
/// `(B [T], F [V/cm], E_r [eV], E_i [meV])` and Cu2O
/// `(B [T], F [V/cm], E_r [meV], E_i [ueV])`, Cu2O energies without the gap.
pub const EP_TABLE: [([f64; 4], [f64; 4]); 7] = [
    ([229.64, 120250.0, -0.1904, -0.6209], [0.590, 41.16, -1.286, -0.419]),
    ([561.26, 140870.0, -0.1866, -0.2564], [1.441, 48.22, -1.261, -1.732]),
    ([799.69, 341940.0, -0.3886, -2.072], [2.053, 117.0, -2.625, -14.00]),
    ([1261.3, 668930.0, -0.3996, -0.5002], [3.238, 229.0, -2.699, -3.379]),
    ([1506.7, 686310.0, -0.5245, -4.402], [3.868, 234.9, -3.544, -29.74]),
    ([2316.3, 1096200.0, -0.6733, -0.5999], [5.946, 375.2, -4.549, -4.054]),
    ([3595.7, 2430880.0, -0.4788, -12.03], [9.231, 832.0, -3.234, -81.25]),
];

pub const TABLE_TOL: f64 = 5e-3;

/// Relative deviations of every hydrogen row mapped to Cu2O through reduced
/// units, as `(row, column, deviation)`.
pub fn cross_material_deviations() -> Vec<(usize, usize, f64)> {
    let h = material_constants(Material::Hydrogen);
    let c = material_constants(Material::CuprousOxide);
    let hev = h.energy_unit / ELEMENTARY_CHARGE;
    let cev = c.energy_unit / ELEMENTARY_CHARGE;
    let mut out = Vec::new();
    for (row, (hy, cu)) in EP_TABLE.iter().enumerate() {
        let gamma = hy[0] / h.magnetic_unit;
        let f = hy[1] * 100.0 / h.electric_unit;
        let er = hy[2] / hev;
        let ei = hy[3] * 1e-3 / hev;
        let mapped = [
            gamma * c.magnetic_unit,
            f * c.electric_unit / 100.0,
            er * cev * 1e3,
            ei * cev * 1e6,
        ];
        for col in 0..4 {
            out.push((row, col, (mapped[col] - cu[col]) / cu[col]));
        }
    }
    out
}

/// Row 1 `E_i`: the Cu2O column differs from the hydrogen column by a clean
/// power of ten, a decimal slip in one of the printed values.
pub const KNOWN_TABLE_MISPRINT: (usize, usize) = (0, 3);

pub fn cross_material() -> Verdict {
    let devs = cross_material_deviations();
    let bad: Vec<_> = devs.iter().filter(|d| d.2.abs() > TABLE_TOL).collect();
    let worst_ok = devs.iter().filter(|d| d.2.abs() <= TABLE_TOL).map(|d| d.2.abs()).fold(0.0, f64::max);
    let names = ["B", "F", "E_r", "E_i"];
    let listed: Vec<String> = bad
        .iter()
        .map(|(r, c, d)| format!("row {} {}: ratio {:.4}", r + 1, names[*c], 1.0 + d))
        .collect();
    Verdict::new(
        bad.is_empty(),
        format!(
            "{}/28 values within {:.1}% (worst {:.3}%){}",
            28 - bad.len(),
            TABLE_TOL * 100.0,
            worst_ok * 100.0,
            if listed.is_empty() { String::new() } else { format!("; off: {}", listed.join(", ")) }
        ),
    )
}

/// Generalized Gauss-Laguerre nodes and weights for `t^alpha e^-t` by the
/// Golub-Welsch eigenvalue method.
pub fn gauss_laguerre(n: usize, alpha: usize) -> (Vec<f64>, Vec<f64>) {
    let a = alpha as f64;
    let mut j = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        j[(i, i)] = 2.0 * i as f64 + 1.0 + a;
        if i + 1 < n {
            let b = (((i + 1) as f64) * ((i + 1) as f64 + a)).sqrt();
            j[(i, i + 1)] = b;
            j[(i + 1, i)] = b;
        }
    }
    let nodes: Vec<f64> = SymmetricEigen::new(j).eigenvalues.iter().copied().collect();
    // w = 1 / sum_k p_k(t)^2 over orthonormal p_k; the first eigenvector
    // component squared loses all relative accuracy at the large nodes
    let weights = nodes
        .iter()
        .map(|&t| {
            let l = laguerre(n - 1, alpha, t);
            let mut ratio = 1.0 / (1..=alpha).map(|k| k as f64).product::<f64>();
            let mut sum = 0.0;
            for (k, lk) in l.iter().enumerate() {
                if k > 0 {
                    ratio *= k as f64 / (k + alpha) as f64;
                }
                sum += lk * lk * ratio;
            }
            1.0 / sum
        })
        .collect();
    (nodes, weights)
}

/// `L_k^alpha(t)` for `k = 0..=n`.
fn laguerre(n: usize, alpha: usize, t: f64) -> Vec<f64> {
    let a = alpha as f64;
    let mut l = vec![1.0; n + 1];
    if n >= 1 {
        l[1] = 1.0 + a - t;
    }
    for k in 1..n {
        let kf = k as f64;
        l[k + 1] = ((2.0 * kf + 1.0 + a - t) * l[k] - (kf + a) * l[k - 1]) / (kf + 1.0);
    }
    l
}

pub const QUADRATURE_TOL: f64 = 1e-10;

/// Largest difference between the closed-form `rho^2`, `rho^4` matrices
/// and quadrature. With `t = rho^2` the element is
/// `c_n c_k / 2 int t^|m| e^-t t^(p/2) L_n L_k dt`.
pub fn quadrature_deviation(n_max: usize, m: i32) -> f64 {
    let am = m.unsigned_abs() as usize;
    let (nodes, weights) = gauss_laguerre(2 * n_max + 6, am);
    let norm: Vec<f64> = (0..=n_max)
        .map(|n| {
            let ratio: f64 = (n + 1..=n + am).map(|k| k as f64).product();
            (2.0 / ratio).sqrt()
        })
        .collect();
    let tables: Vec<Vec<f64>> = nodes.iter().map(|&t| laguerre(n_max, am, t)).collect();
    let spec = BasisSpec::new(n_max, m);
    let mut worst: f64 = 0.0;
    for p in [2u32, 4] {
        let op = radial_power_matrix(spec, p).unwrap();
        for n in 0..=n_max {
            for k in 0..=n_max {
                let q: f64 = nodes
                    .iter()
                    .zip(&weights)
                    .zip(&tables)
                    .map(|((&t, &w), l)| w * t.powi(p as i32 / 2) * l[n] * l[k])
                    .sum::<f64>()
                    * norm[n]
                    * norm[k]
                    / 2.0;
                worst = worst.max((q - op.get(n, k)).abs());
            }
        }
    }
    worst
}

pub fn quadrature_oracle() -> Verdict {
    let worst = (0..=2).map(|m| quadrature_deviation(12, m)).fold(0.0, f64::max);
    Verdict::new(
        worst <= QUADRATURE_TOL,
        format!("n, n' <= 12, m = 0..2: max |closed form - quadrature| = {worst:.2e} (tol {QUADRATURE_TOL:.0e})"),
    )
}

fn rc(rng: &mut ChaCha8Rng, s: f64) -> Complex64 {
    Complex64::new(rng.gen_range(-s..s), rng.gen_range(-s..s))
}

/// Model with only the `eta` coefficients set, on a unit stencil.
pub fn eta_model(d: Complex64, rest: [Complex64; 5]) -> ModelCoefficients {
    let z = Complex64::new(0.0, 0.0);
    ModelCoefficients {
        kappa0: z,
        kappa_gamma: z,
        kappa_f: z,
        eta0: d,
        eta_gamma: rest[0],
        eta_f: rest[1],
        eta_gg: rest[2],
        eta_gf: rest[3],
        eta_ff: rest[4],
        center: FieldPoint::new(4.0, 4.0),
        h_gamma: 1.0,
        h_f: 1.0,
    }
}

/// Residual of the real and imaginary parts of `eta` with `D` scaled by
/// `eps`, and their Jacobian.
fn eta_system(m: &ModelCoefficients, eps: f64, x: f64, y: f64) -> ([f64; 2], [[f64; 2]; 2]) {
    let v = m.eta0 * eps + m.eta_gamma * x + m.eta_f * y + m.eta_gg * (x * x) + m.eta_gf * (x * y) + m.eta_ff * (y * y);
    let dx = m.eta_gamma + m.eta_gg * (2.0 * x) + m.eta_gf * y;
    let dy = m.eta_f + m.eta_gf * x + m.eta_ff * (2.0 * y);
    ([v.re, v.im], [[dx.re, dy.re], [dx.im, dy.im]])
}

/// Newton continuation in `eps` on the two real equations, from the origin
/// at `eps = 0`. `None` when the path folds (singular Jacobian) before
/// `eps = 1`.
pub fn newton_continuation(m: &ModelCoefficients, steps: usize) -> Option<(f64, f64)> {
    let (mut x, mut y) = (0.0, 0.0);
    for s in 1..=steps {
        let eps = s as f64 / steps as f64;
        let mut converged = false;
        for _ in 0..30 {
            let (r, j) = eta_system(m, eps, x, y);
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let scale = (j[0][0].abs() + j[0][1].abs()) * (j[1][0].abs() + j[1][1].abs());
            if det.abs() <= 1e-10 * scale {
                return None;
            }
            let dx = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
            let dy = (r[1] * j[0][0] - r[0] * j[1][0]) / det;
            x -= dx;
            y -= dy;
            if dx.abs() + dy.abs() <= 1e-15 * (1.0 + x.abs() + y.abs()) {
                converged = true;
                break;
            }
        }
        if !converged {
            return None;
        }
    }
    Some((x, y))
}

pub const NEWTON_TOL: f64 = 1e-10;
pub const ETA_RESIDUAL_TOL: f64 = 1e-9;

/// Continuation against Newton on 100 random coefficient sets whose Newton
/// path reaches `eps = 1`.
pub fn newton_oracle(seed: u64) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut compared, mut agreed, mut draws) = (0, 0, 0);
    let mut worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    while compared < 100 && draws < 10_000 {
        draws += 1;
        let d = rc(&mut rng, 1.0);
        let lin = [rc(&mut rng, 1.0), rc(&mut rng, 1.0)];
        let quad = [rc(&mut rng, 0.3), rc(&mut rng, 0.3), rc(&mut rng, 0.3)];
        let m = eta_model(d, [lin[0], lin[1], quad[0], quad[1], quad[2]]);
        let Some((xn, yn)) = newton_continuation(&m, 4000) else {
            continue;
        };
        let Ok(cand) = ep_candidate(&m) else {
            continue;
        };
        compared += 1;
        let c = cand.continuation;
        let err = (c.x - xn).abs().max((c.y - yn).abs());
        if c.complete {
            worst = worst.max(err);
            let (_, eta) = m.eval_offset(c.x, c.y);
            worst_residual = worst_residual.max((eta.re.abs() + eta.im.abs()) / d.norm());
        }
        if c.complete && err <= NEWTON_TOL {
            agreed += 1;
        }
    }
    Verdict::new(
        agreed == 100 && worst_residual <= ETA_RESIDUAL_TOL,
        format!(
            "{agreed}/{compared} draws agree with Newton (max diff {worst:.2e}, tol {NEWTON_TOL:.0e}); \
             max |eta|/|D| at accepted roots {worst_residual:.2e} (tol {ETA_RESIDUAL_TOL:.0e})"
        ),
    )
}

pub const PLANTED_TOL: f64 = 1e-10;

/// One planted model: search from a nearby seed, then check certificates on
/// one loop that holds the planted point and one that does not.
pub struct PlantedOutcome {
    pub position_error: f64,
    pub energy_error: f64,
    pub converged: bool,
    pub certificates_match: bool,
}

pub fn planted_case(rng: &mut ChaCha8Rng) -> PlantedOutcome {
    let ep = FieldPoint::new(rng.gen_range(5e-4..3e-3), rng.gen_range(1e-5..4e-5));
    let scale = (ep.gamma / 10.0, ep.f / 10.0);
    let model = PlantedModel::random(rng, ep, scale, 0.05);
    let seed = ep.offset(rng.gen_range(-0.3..0.3) * scale.0, rng.gen_range(-0.3..0.3) * scale.1);
    let options = SearchOptions {
        initial_h: Some((0.5 * scale.0, 0.5 * scale.1)),
        ..SearchOptions::default()
    };
    let (position_error, energy_error, converged) = match find_ep_with(&model, seed, model.ep_energy(), &options) {
        Ok(rec) => (
            ((rec.position.gamma - ep.gamma) / scale.0).abs().max(((rec.position.f - ep.f) / scale.1).abs()),
            (rec.energy - model.ep_energy()).norm() / model.ep_energy().norm(),
            rec.converged() && rec.winding == 1,
        ),
        Err(_) => (f64::INFINITY, f64::INFINITY, false),
    };

    // certificates on a flatter model, so that only the planted zero can
    // fall inside loops of a few scale units
    let flat = PlantedModel::random(rng, ep, scale, 0.02);
    let mut certificates_match = true;
    for want_inside in [true, false] {
        let (hg, hf) = (rng.gen_range(0.3..1.5) * scale.0, rng.gen_range(0.3..1.5) * scale.1);
        let r = if want_inside { rng.gen_range(0.0..0.8) } else { rng.gen_range(1.25..2.5) };
        let phi = rng.gen_range(0.0..std::f64::consts::TAU);
        let center = ep.offset(-r * hg * phi.cos(), -r * hf * phi.sin());
        debug_assert_eq!(flat.inside(center, hg, hf), want_inside);
        let reference = match rydberg_ep::spectral::PairSource::seed_pair(&flat, center, flat.ep_energy()) {
            Ok(p) => p,
            Err(_) => {
                certificates_match = false;
                continue;
            }
        };
        let ok = sample_octagon(center, hg, hf, &flat, &reference)
            .map(|s| fit_coefficients(&s))
            .and_then(|c| certify(&c, &LoopDiscretization::new(512, center, hg, hf)?));
        certificates_match &= match ok {
            Ok(cert) => {
                let inside = flat.inside(center, hg, hf);
                (cert.winding.value == 1 && cert.exchange) == inside && (cert.winding.value == 0 && !cert.exchange) == !inside
            }
            Err(_) => false,
        };
    }
    PlantedOutcome {
        position_error,
        energy_error,
        converged,
        certificates_match,
    }
}

pub fn planted_suite(seed: u64) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes: Vec<PlantedOutcome> = (0..100).map(|_| planted_case(&mut rng)).collect();
    let recovered = outcomes
        .iter()
        .filter(|o| o.converged && o.position_error <= PLANTED_TOL && o.energy_error <= 1e-13)
        .count();
    let certified = outcomes.iter().filter(|o| o.certificates_match).count();
    let worst_pos = outcomes.iter().map(|o| o.position_error).fold(0.0, f64::max);
    let worst_e = outcomes.iter().map(|o| o.energy_error).fold(0.0, f64::max);
    Verdict::new(
        recovered == 100 && certified == 100,
        format!(
            "recovered {recovered}/100 (max offset {worst_pos:.2e} scale units, tol {PLANTED_TOL:.0e}; \
             max relative energy error {worst_e:.1e}); certificates match placement {certified}/100"
        ),
    )
}
