//! Acceptance run: one PASS/FAIL line per criterion, tolerances pinned here.
//!
//! Criterion 4 is the full-scale search at `n_max = 90` and takes several
//! minutes in an optimized build; criteria 5 and the c-norm part of 9 read
//! the same run.

mod common;

use std::time::Instant;

use common::*;
use num_complex::Complex64;
use rydberg_ep::basis::BasisSpec;
use rydberg_ep::search::{find_ep_observed, hydrogen_solver, EPRecord, SearchOptions};
use rydberg_ep::spectral::{DilationParameter, PairSource, ResonanceSolver, SolverConfig, DEFAULT_ROTATION_ANGLE};
use rydberg_ep::verification::{certify, LoopDiscretization, DEFAULT_LOOP_POINTS};
use rydberg_ep::wavefunction::{averaged_vector, c_normalized, density_grid, GridSpec};
use rydberg_ep::FieldPoint;

const EP_GAMMA: f64 = 8.598633574e-4;
const EP_F: f64 = 2.005076385e-5;
const EP_ENERGY: Complex64 = Complex64::new(-7.647637585e-3, -8.46181432e-7);
/// Six significant digits.
const POSITION_REL_TOL: f64 = 5e-7;
const ENERGY_ABS_TOL: f64 = 1e-9;
const GAP_TOL: f64 = 1e-9;
const LOOP_CLOSURE_TOL: f64 = 1e-10;
const EXTENT_REL_TOL: f64 = 0.02;
const PEAK_FACTOR: f64 = 10.0;

fn search_n90() -> Result<EPRecord, rydberg_ep::Error> {
    let seed = FieldPoint::new(1.481e-3, 1.851e-5);
    let guess = Complex64::new(-6.90e-3, 0.0);
    let solver = hydrogen_solver(BasisSpec::new(90, 0), seed, DEFAULT_ROTATION_ANGLE, SolverConfig::default())?;
    let mut k = 0;
    find_ep_observed(&solver, seed, guess, &SearchOptions::default(), &mut |it| {
        eprintln!(
            "      iteration {k:2}: gamma0 = {:.10e} f0 = {:.10e} |E1-E2| = {:.3e} W = {}",
            it.center.gamma,
            it.center.f,
            it.gap,
            it.winding.map_or("-".to_string(), |w| w.to_string())
        );
        k += 1;
    })
}

fn ep_reproduction(rec: &EPRecord) -> Verdict {
    let dg = (rec.position.gamma - EP_GAMMA).abs() / EP_GAMMA;
    let df = (rec.position.f - EP_F).abs() / EP_F;
    let de_re = (rec.energy.re - EP_ENERGY.re).abs();
    let de_im = (rec.energy.im - EP_ENERGY.im).abs();
    let gap = rec.iterations.last().map_or(f64::INFINITY, |it| it.gap);
    let passed = rec.converged()
        && dg <= POSITION_REL_TOL
        && df <= POSITION_REL_TOL
        && de_re <= ENERGY_ABS_TOL
        && de_im <= ENERGY_ABS_TOL
        && rec.winding == 1
        && gap <= GAP_TOL;
    Verdict::new(
        passed,
        format!(
            "{} after {} iterations: gamma {:.10e} (rel {dg:.1e}), f {:.10e} (rel {df:.1e}), \
             E {:.10e} {:+.10e}i (|dRe| {de_re:.1e}, |dIm| {de_im:.1e}), W = {}, |E1-E2| = {gap:.2e}",
            rec.status.as_str(),
            rec.iterations.len(),
            rec.position.gamma,
            rec.position.f,
            rec.energy.re,
            rec.energy.im,
            rec.winding
        ),
    )
}

fn winding_behaviour(rec: &EPRecord) -> Verdict {
    let mut early_closed = None;
    for (k, it) in rec.iterations.iter().enumerate() {
        if it.winding != Some(0) {
            continue;
        }
        let Ok(lp) = LoopDiscretization::around(&it.coefficients, DEFAULT_LOOP_POINTS) else {
            continue;
        };
        if let Ok(cert) = certify(&it.coefficients, &lp) {
            let (closed, _) = cert.paths.endpoint_mismatch();
            let scale = 2.0 * cert.paths.max_half_gap();
            if closed <= LOOP_CLOSURE_TOL * scale && !cert.exchange {
                early_closed = Some((k, closed / scale));
                break;
            }
        }
    }
    let last = rec.iterations.last();
    let final_swap = last.and_then(|it| {
        let lp = LoopDiscretization::around(&it.coefficients, DEFAULT_LOOP_POINTS).ok()?;
        let cert = certify(&it.coefficients, &lp).ok()?;
        let (_, swapped) = cert.paths.endpoint_mismatch();
        let scale = 2.0 * cert.paths.max_half_gap();
        Some((cert.winding.value, cert.exchange, swapped / scale))
    });
    let passed = early_closed.is_some()
        && matches!(final_swap, Some((1, true, r)) if r <= LOOP_CLOSURE_TOL);
    Verdict::new(
        passed,
        format!(
            "first W = 0 iteration with closed paths: {}; final iteration: {}",
            early_closed.map_or("none".to_string(), |(k, r)| format!("#{k} (mismatch {r:.1e} max|sqrt eta|)")),
            final_swap.map_or("not certified".to_string(), |(w, x, r)| format!(
                "W = {w}, exchange = {x} (swapped mismatch {r:.1e} max|sqrt eta|)"
            ))
        ),
    )
}

fn wavefunction_properties(rec: Option<&EPRecord>) -> Verdict {
    let spec = BasisSpec::new(90, 0);
    let point = FieldPoint::new(2.387819e-3, 2.739422e-5);
    let grids = (|| {
        let dilation = DilationParameter::new(2.6, 0.1)?;
        let solver = ResonanceSolver::new(spec, dilation, SolverConfig::default());
        let pair = solver.seed_pair(point, Complex64::new(-6.85886e-3, -9.42211e-6))?;
        let avg = averaged_vector(&pair.first.coefficients, &pair.second.coefficients)?;
        let states = [&pair.first.coefficients, &pair.second.coefficients, &avg]
            .iter()
            .map(|v| c_normalized(v, spec))
            .collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&[Complex64]> = states.iter().map(|v| v.as_slice()).collect();
        let grid = GridSpec {
            mu_max: 40.0,
            nu_max: 40.0,
            mu_points: 160,
            nu_points: 160,
            phi: 0.0,
        };
        density_grid(&refs, spec, dilation, &grid)
    })();
    let waves = match grids {
        Ok(w) => w,
        Err(e) => return Verdict::new(false, format!("density grid failed: {e}")),
    };
    let (x1, x2) = (waves.extent(0, 0.9), waves.extent(1, 0.9));
    let extent_rel = (x1 - x2).abs() / x1.max(x2);
    let factor = waves.peak(2) / waves.peak(0).max(waves.peak(1));
    let norms: Vec<f64> = rec
        .map(|r| r.iterations.iter().rev().take(3).rev().map(|it| it.c_norm).collect())
        .unwrap_or_default();
    let decreasing = norms.len() == 3 && norms[0] > norms[1] && norms[1] > norms[2];
    Verdict::new(
        extent_rel <= EXTENT_REL_TOL && factor >= PEAK_FACTOR && decreasing,
        format!(
            "extents {x1:.3} / {x2:.3} (rel {extent_rel:.1e}, tol {EXTENT_REL_TOL}); averaged peak {factor:.0}x \
             the states' (need {PEAK_FACTOR}x); final |c-norm| {}",
            norms.iter().map(|c| format!("{c:.3e}")).collect::<Vec<_>>().join(" > ")
        ),
    )
}

fn report(id: usize, name: &str, started: Instant, v: &Verdict) {
    println!(
        "{} C{id} {name} [{:.1} s]: {}",
        if v.passed { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64(),
        v.detail
    );
}

fn main() {
    let mut verdicts: Vec<(usize, Verdict)> = Vec::new();
    let mut check = |id: usize, name: &str, f: &mut dyn FnMut() -> Verdict| {
        let t = Instant::now();
        let v = f();
        report(id, name, t, &v);
        verdicts.push((id, v));
    };

    check(1, "Coulomb limit", &mut || coulomb_levels(60));
    check(2, "unit tables", &mut unit_tables);
    check(3, "cross-material table", &mut cross_material);

    let t = Instant::now();
    eprintln!("      running the n_max = 90 search");
    let rec = search_n90();
    let elapsed = t.elapsed();
    check(4, "EP reproduction", &mut || match &rec {
        Ok(r) => ep_reproduction(r),
        Err(e) => Verdict::new(false, format!("search failed: {e}")),
    });
    eprintln!("      search took {:.0} s", elapsed.as_secs_f64());
    check(5, "winding behaviour", &mut || match &rec {
        Ok(r) => winding_behaviour(r),
        Err(e) => Verdict::new(false, format!("search failed: {e}")),
    });
    check(6, "planted models", &mut || planted_suite(31));
    check(7, "matrix elements", &mut quadrature_oracle);
    check(8, "quartic vs Newton", &mut || newton_oracle(21));
    check(9, "wave functions", &mut || wavefunction_properties(rec.as_ref().ok()));

    let passed = verdicts.iter().filter(|(_, v)| v.passed).count();
    println!("{passed}/{} criteria pass", verdicts.len());

    // Criterion 3 cannot pass as printed: one entry of the source table
    // carries a decimal slip. Anything beyond that entry is a regression.
    let only_misprint = cross_material_deviations()
        .iter()
        .filter(|d| d.2.abs() > TABLE_TOL)
        .all(|d| (d.0, d.1) == KNOWN_TABLE_MISPRINT);
    let unexpected: Vec<usize> = verdicts
        .iter()
        .filter(|(id, v)| !v.passed && !(*id == 3 && only_misprint))
        .map(|(id, _)| *id)
        .collect();
    if !verdicts[2].1.passed && only_misprint {
        println!("C3 stays red: row 1 E_i differs by a factor of ten between the two columns of the source table");
    }
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
