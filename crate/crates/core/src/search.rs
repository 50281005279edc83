//! Iterative localization of an exceptional point: sample the octagon, fit
//! the model, move the center to the model's zero, repeat.

use num_complex::Complex64;

use crate::basis::BasisSpec;
use crate::octagon::{ep_candidate, eval_model, fit_coefficients, sample_octagon, EpCandidate, ModelCoefficients};
use crate::spectral::{DilationParameter, PairSource, ResonancePair, ResonanceSolver, SolverConfig};
use crate::verification::{certify, LoopDiscretization, DEFAULT_LOOP_POINTS};
use crate::{Error, FieldPoint, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    /// Initial stencil half widths relative to the seed `(gamma, f)`. The
    /// field axis is narrower: near an avoided crossing `eta` varies across
    /// a valley in `f` far thinner than its extent along `gamma`.
    pub relative_h: (f64, f64),
    /// Explicit initial half widths; override `relative_h`.
    pub initial_h: Option<(f64, f64)>,
    pub max_iterations: usize,
    /// Converged once `|E1 - E2|` at the center drops to this value.
    pub degeneracy_floor: f64,
    /// Converged once the step is this small relative to the center.
    pub step_tolerance: f64,
    /// Retries with halved stencil on ambiguous tracking.
    pub max_retries: usize,
    /// Consecutive step increases that count as divergence.
    pub divergence_window: usize,
    pub loop_points: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            relative_h: (0.05, 0.005),
            initial_h: None,
            max_iterations: 40,
            degeneracy_floor: 1e-9,
            step_tolerance: 1e-9,
            max_retries: 4,
            divergence_window: 3,
            loop_points: DEFAULT_LOOP_POINTS,
        }
    }
}

impl SearchOptions {
    fn initial_half_widths(&self, seed: FieldPoint) -> Result<(f64, f64)> {
        let h = self.initial_h.unwrap_or_else(|| {
            let hg = self.relative_h.0 * seed.gamma.abs();
            let hf = self.relative_h.1 * if seed.f != 0.0 { seed.f.abs() } else { seed.gamma.abs() };
            (hg, hf)
        });
        if !(h.0 > 0.0 && h.1 > 0.0) {
            return Err(Error::InvalidInput(format!("initial stencil {h:?} must be positive")));
        }
        Ok(h)
    }
}

/// One pass of the iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub center: FieldPoint,
    pub h_gamma: f64,
    pub h_f: f64,
    /// The tracked energies at the center.
    pub energies: [Complex64; 2],
    /// `|E1 - E2|` at the center.
    pub gap: f64,
    /// Model zero reached from the center.
    pub estimate: FieldPoint,
    /// Largest epsilon at which the continued root was real; `1` when the
    /// continuation completed.
    pub epsilon: f64,
    /// `kappa / 2` at the estimate.
    pub energy_estimate: Complex64,
    pub coefficients: ModelCoefficients,
    /// Winding number of `eta` on the stencil ellipse, if it could be
    /// certified.
    pub winding: Option<i64>,
    pub exchange: Option<bool>,
    /// `|v^T S v| / (v^H S v)` of the first center eigenvector.
    pub c_norm: f64,
    /// Non-quadratic part of `eta` seen on the diagonal points.
    pub model_defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Converged,
    IterationCap,
    Diverged,
}

impl SearchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchStatus::Converged => "converged",
            SearchStatus::IterationCap => "iteration-cap",
            SearchStatus::Diverged => "diverged",
        }
    }
}

impl std::str::FromStr for SearchStatus {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "converged" => Ok(SearchStatus::Converged),
            "iteration-cap" => Ok(SearchStatus::IterationCap),
            "diverged" => Ok(SearchStatus::Diverged),
            other => Err(Error::Parse(format!("unknown status {other:?}"))),
        }
    }
}

/// Outcome of a search. Unconverged runs keep their history and the best
/// point reached so far.
#[derive(Debug, Clone, PartialEq)]
pub struct EPRecord {
    pub position: FieldPoint,
    pub energy: Complex64,
    /// Winding number on the final stencil ellipse (0 when it could not be
    /// certified).
    pub winding: i64,
    pub exchange: bool,
    pub status: SearchStatus,
    /// Smallest `|E1 - E2|` met at any center.
    pub degeneracy_floor: f64,
    pub iterations: Vec<IterationRecord>,
    /// Tracked pair at the final center, kept for later verification and
    /// wave-function output.
    pub final_pair: Option<ResonancePair>,
}

impl EPRecord {
    pub fn converged(&self) -> bool {
        self.status == SearchStatus::Converged
    }

    /// Turns an unconverged record into the matching error.
    pub fn into_result(self) -> Result<Self> {
        match self.status {
            SearchStatus::Converged => Ok(self),
            SearchStatus::IterationCap => Err(Error::IterationCapReached(self.iterations.len())),
            SearchStatus::Diverged => Err(Error::Diverged(self.iterations.len())),
        }
    }

    /// Model of the final iteration.
    pub fn final_coefficients(&self) -> Option<&ModelCoefficients> {
        self.iterations.last().map(|it| &it.coefficients)
    }
}

/// Mean energy `kappa / 2` of the model at `ep`.
pub fn ep_energy_estimate(coeffs: &ModelCoefficients, ep: FieldPoint) -> Complex64 {
    eval_model(coeffs, ep).0 / 2.0
}

/// Stencil half widths for the next iteration: 1.5 times the last step,
/// between `1e-9` of the center and the initial widths. The step is
/// measured in units of the initial widths so both axes shrink together.
pub fn step_size_update(initial: (f64, f64), center: FieldPoint, step: (f64, f64)) -> (f64, f64) {
    let ratio = (step.0 / initial.0).abs().max((step.1 / initial.1).abs());
    let clamp = |h0: f64, c: f64| {
        let floor = (1e-9 * c.abs()).min(h0);
        (1.5 * ratio * h0).clamp(floor, h0)
    };
    (clamp(initial.0, center.gamma), clamp(initial.1, center.f))
}

/// Runs the search with any pair source.
pub fn find_ep_with<S: PairSource + ?Sized>(
    source: &S,
    initial: FieldPoint,
    energy_guess: Complex64,
    options: &SearchOptions,
) -> Result<EPRecord> {
    find_ep_observed(source, initial, energy_guess, options, &mut |_| {})
}

/// [`find_ep_with`] that hands every finished iteration to `observe`.
pub fn find_ep_observed<S: PairSource + ?Sized>(
    source: &S,
    initial: FieldPoint,
    energy_guess: Complex64,
    options: &SearchOptions,
    observe: &mut dyn FnMut(&IterationRecord),
) -> Result<EPRecord> {
    if !(initial.gamma > 0.0) {
        return Err(Error::InvalidInput(format!("seed gamma {} must be positive", initial.gamma)));
    }
    if !(energy_guess.re.is_finite() && energy_guess.im.is_finite()) {
        return Err(Error::InvalidInput("energy guess must be finite".into()));
    }
    let h_init = options.initial_half_widths(initial)?;
    let mut reference = source.seed_pair(initial, energy_guess)?;
    let mut center = initial;
    let mut h = h_init;
    let mut iterations: Vec<IterationRecord> = Vec::new();
    let mut best_gap = f64::INFINITY;
    let mut last_ratio = f64::INFINITY;
    let mut growth = 0;
    let mut status = SearchStatus::IterationCap;
    let mut final_pair = None;
    let mut final_cert: Option<(i64, bool)> = None;
    let mut result_point = initial;
    let mut result_energy = reference.mean_energy();

    for _ in 0..options.max_iterations {
        let sample = sample_with_retries(source, center, &mut h, &reference, options.max_retries)?;
        let center_pair = sample.center_pair().clone();
        let coeffs = fit_coefficients(&sample);
        let cand: EpCandidate = ep_candidate(&coeffs)?;
        let (mut x, mut y) = cand.step();
        // never step to non-positive magnetic field
        while center.gamma + x <= 0.1 * center.gamma {
            x *= 0.5;
            y *= 0.5;
        }
        let estimate = center.offset(x, y);
        let energy_estimate = ep_energy_estimate(&coeffs, estimate);
        let cert = LoopDiscretization::around(&coeffs, options.loop_points)
            .and_then(|lp| certify(&coeffs, &lp))
            .ok();
        let (c_bilinear, c_hermitian) = source.self_overlaps(&center_pair.first.coefficients);
        let gap = center_pair.energy_gap();
        best_gap = best_gap.min(gap);
        iterations.push(IterationRecord {
            center,
            h_gamma: h.0,
            h_f: h.1,
            energies: [center_pair.first.energy, center_pair.second.energy],
            gap,
            estimate,
            epsilon: cand.continuation.epsilon,
            energy_estimate,
            coefficients: coeffs,
            winding: cert.as_ref().map(|c| c.winding.value),
            exchange: cert.as_ref().map(|c| c.exchange),
            c_norm: if c_hermitian > 0.0 { c_bilinear.norm() / c_hermitian } else { 0.0 },
            model_defect: coeffs.diagonal_defect(&sample),
        });
        observe(iterations.last().unwrap());
        result_point = estimate;
        result_energy = energy_estimate;
        final_cert = cert.map(|c| (c.winding.value, c.exchange));
        final_pair = Some(center_pair.clone());

        let relative_step = (x / center.gamma).abs().max(if center.f != 0.0 { (y / center.f).abs() } else { y.abs() });
        if gap <= options.degeneracy_floor || (cand.continuation.complete && relative_step <= options.step_tolerance) {
            status = SearchStatus::Converged;
            break;
        }
        if relative_step <= options.step_tolerance {
            // the model zero leaves the real plane right at the center: no
            // progress is possible from here
            status = SearchStatus::Diverged;
            break;
        }
        let ratio = (x / h_init.0).abs().max((y / h_init.1).abs());
        growth = if ratio > last_ratio { growth + 1 } else { 0 };
        last_ratio = ratio;
        if growth >= options.divergence_window {
            status = SearchStatus::Diverged;
            break;
        }
        reference = center_pair;
        center = estimate;
        h = step_size_update(h_init, center, (x, y));
    }
    let (winding, exchange) = final_cert.unwrap_or((0, false));
    Ok(EPRecord {
        position: result_point,
        energy: result_energy,
        winding,
        exchange,
        status,
        degeneracy_floor: best_gap,
        iterations,
        final_pair,
    })
}

fn sample_with_retries<S: PairSource + ?Sized>(
    source: &S,
    center: FieldPoint,
    h: &mut (f64, f64),
    reference: &ResonancePair,
    max_retries: usize,
) -> Result<crate::octagon::OctagonSample> {
    let mut retries = 0;
    loop {
        match sample_octagon(center, h.0, h.1, source, reference) {
            Ok(s) => return Ok(s),
            Err(Error::NegativeField(_)) => {
                h.0 = 0.5 * center.gamma;
            }
            Err(e) if matches!(e.root(), Error::AmbiguousTracking { .. }) && retries < max_retries => {
                retries += 1;
                h.0 *= 0.5;
                h.1 *= 0.5;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Solver setup for a search in the full basis: `|b|` from the seed field,
/// rotation angle `angle`.
pub fn hydrogen_solver(spec: BasisSpec, seed: FieldPoint, angle: f64, config: SolverConfig) -> Result<ResonanceSolver> {
    let dilation = DilationParameter::for_gamma(seed.gamma, angle)?;
    Ok(ResonanceSolver::new(spec, dilation, config))
}

/// Search in the full basis with default solver settings and the default
/// rotation angle.
pub fn find_ep(initial: FieldPoint, energy_guess: Complex64, spec: BasisSpec, options: &SearchOptions) -> Result<EPRecord> {
    let solver = hydrogen_solver(spec, initial, crate::spectral::DEFAULT_ROTATION_ANGLE, SolverConfig::default())?;
    find_ep_with(&solver, initial, energy_guess, options)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic::PlantedModel;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn step_update_clamps() {
        let init = (1e-4, 1e-6);
        let c = FieldPoint::new(1e-3, 2e-5);
        let (hg, hf) = step_size_update(init, c, (0.0, 0.0));
        assert!((hg / 1e-12 - 1.0).abs() < 1e-12 && (hf / 2e-14 - 1.0).abs() < 1e-12);
        assert_eq!(step_size_update(init, c, (1.0, 0.0)), init);
        let (hg, hf) = step_size_update(init, c, (2e-5, 0.0));
        assert!((hg - 3e-5).abs() < 1e-20 && (hf - 3e-7).abs() < 1e-22);
    }

    #[test]
    fn energy_estimate_at_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let m = PlantedModel::random(&mut rng, FieldPoint::new(1.0, 1.0), (0.1, 0.1), 0.3);
        let pair = m.seed_pair(FieldPoint::new(1.0, 1.0), Complex64::new(0.0, 0.0)).unwrap();
        let sample = crate::octagon::OctagonSample::from_pairs(
            FieldPoint::new(1.0, 1.0),
            0.1,
            0.1,
            crate::octagon::octagon_points(FieldPoint::new(1.0, 1.0), 0.1, 0.1)
                .unwrap()
                .iter()
                .map(|&p| m.track_pair(p, &pair).unwrap())
                .collect(),
        )
        .unwrap();
        let coeffs = fit_coefficients(&sample);
        assert_eq!(ep_energy_estimate(&coeffs, coeffs.center), coeffs.kappa0 / 2.0);
    }

    #[test]
    fn planted_search_recovers_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let ep = FieldPoint::new(1e-3, 2e-5);
        let model = PlantedModel::random(&mut rng, ep, (1e-4, 2e-6), 0.3);
        let seed = FieldPoint::new(1.03e-3, 1.97e-5);
        let rec = find_ep_with(&model, seed, Complex64::new(-0.5, 0.0), &SearchOptions::default()).unwrap();
        assert!(rec.converged());
        assert!(((rec.position.gamma - ep.gamma) / 1e-4).abs() < 1e-10);
        assert!(((rec.position.f - ep.f) / 2e-6).abs() < 1e-10);
        assert!((rec.energy - model.ep_energy()).norm() < 1e-12);
        assert!(rec.iterations.len() <= 3, "{}", rec.iterations.len());
        assert_eq!(rec.winding, 1);
    }

    #[test]
    fn seed_on_ep_stops_at_once() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let ep = FieldPoint::new(1e-3, 2e-5);
        let model = PlantedModel::random(&mut rng, ep, (1e-4, 2e-6), 0.3);
        let rec = find_ep_with(&model, ep, Complex64::new(-0.5, 0.0), &SearchOptions::default()).unwrap();
        assert!(rec.converged());
        assert_eq!(rec.iterations.len(), 1);
        // the gap itself is only sqrt(rounding) small at an exceptional
        // point, so the step criterion is the one that fires
        let it = &rec.iterations[0];
        assert!(((it.estimate.gamma - ep.gamma) / ep.gamma).abs() < 1e-9);
        assert!(((it.estimate.f - ep.f) / ep.f).abs() < 1e-9);
    }
}
