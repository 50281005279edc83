//! Spectra along rays of constant `gamma/f` and detection of avoided
//! crossings, the usual seeds for an exceptional point search.

use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::BasisSpec;
use crate::linalg::{dotc, norm2};
use crate::spectral::{DilationParameter, PencilOperators, Resonance, ResonanceSolver, SolverConfig, DEFAULT_ROTATION_ANGLE};
use crate::{Error, FieldPoint, Result};

/// Scan settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanConfig {
    /// Fixed ratio `gamma / f`.
    pub ratio: f64,
    pub gamma_range: (f64, f64),
    pub steps: usize,
    pub spec: BasisSpec,
    /// Window on `Re E`; resonances outside it are discarded.
    pub energy_window: (f64, f64),
    /// Resonances requested per point around the window center.
    pub track_count: usize,
    pub angle: f64,
    /// Smallest normalized overlap that continues a track.
    pub overlap_threshold: f64,
    /// Seed of the eigensolver start vectors.
    pub seed: u64,
}

impl ScanConfig {
    pub fn new(ratio: f64, gamma_range: (f64, f64), steps: usize, spec: BasisSpec, energy_window: (f64, f64)) -> Self {
        Self {
            ratio,
            gamma_range,
            steps,
            spec,
            energy_window,
            track_count: 12,
            angle: DEFAULT_ROTATION_ANGLE,
            overlap_threshold: 0.5,
            seed: SolverConfig::default().arnoldi.seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.gamma_range;
        if !(lo > 0.0 && lo < hi && hi.is_finite()) {
            return Err(Error::InvalidInput(format!("gamma range ({lo}, {hi}) must satisfy 0 < min < max")));
        }
        if self.steps < 2 {
            return Err(Error::InvalidInput(format!("need at least 2 steps, got {}", self.steps)));
        }
        if !(self.ratio > 0.0 && self.ratio.is_finite()) {
            return Err(Error::InvalidInput(format!("ratio {} must be positive", self.ratio)));
        }
        if !(self.energy_window.0 < self.energy_window.1) {
            return Err(Error::InvalidInput("energy window must satisfy min < max".into()));
        }
        if self.track_count == 0 {
            return Err(Error::InvalidInput("track count must be positive".into()));
        }
        Ok(())
    }

    /// Scan abscissae, uniformly spaced.
    pub fn gammas(&self) -> Vec<f64> {
        let (lo, hi) = self.gamma_range;
        (0..self.steps)
            .map(|j| lo + (hi - lo) * j as f64 / (self.steps - 1) as f64)
            .collect()
    }

    pub fn point(&self, gamma: f64) -> FieldPoint {
        FieldPoint::new(gamma, gamma / self.ratio)
    }
}

/// One resonance attached to a track.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumPoint {
    pub step: usize,
    pub gamma: f64,
    pub f: f64,
    pub track: usize,
    pub energy: Complex64,
    /// Overlap with the predecessor on the same track; `None` where the
    /// track starts.
    pub overlap: Option<f64>,
}

/// A resonance that matched no existing track and started a new one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackBreak {
    pub step: usize,
    pub gamma: f64,
    pub track: usize,
    /// Best overlap it had with any open track.
    pub best_overlap: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum {
    pub ratio: f64,
    pub gammas: Vec<f64>,
    pub points: Vec<SpectrumPoint>,
    pub breaks: Vec<TrackBreak>,
}

impl Spectrum {
    /// Points grouped by track id, each in scan order.
    pub fn tracks(&self) -> BTreeMap<usize, Vec<&SpectrumPoint>> {
        let mut out: BTreeMap<usize, Vec<&SpectrumPoint>> = BTreeMap::new();
        for p in &self.points {
            out.entry(p.track).or_default().push(p);
        }
        out
    }

    /// Points of one scan step, sorted by `Re E`.
    pub fn at_step(&self, step: usize) -> Vec<&SpectrumPoint> {
        let mut v: Vec<&SpectrumPoint> = self.points.iter().filter(|p| p.step == step).collect();
        v.sort_by(|a, b| a.energy.re.total_cmp(&b.energy.re));
        v
    }
}

/// Levels at a field point.
pub trait LevelSource: Sync {
    fn levels(&self, point: FieldPoint) -> Result<Vec<Resonance>>;
}

/// Hydrogen levels with `|b|` following the field at every point.
pub struct HydrogenLevels {
    ops: Arc<PencilOperators>,
    angle: f64,
    target: Complex64,
    window: (f64, f64),
    solver: SolverConfig,
}

impl HydrogenLevels {
    pub fn new(config: &ScanConfig) -> Self {
        let (lo, hi) = config.energy_window;
        let mut solver = SolverConfig {
            count: config.track_count,
            ..SolverConfig::default()
        };
        solver.arnoldi.seed = config.seed;
        Self {
            ops: Arc::new(PencilOperators::new(config.spec)),
            angle: config.angle,
            target: Complex64::new(0.5 * (lo + hi), 0.0),
            window: config.energy_window,
            solver,
        }
    }
}

impl LevelSource for HydrogenLevels {
    fn levels(&self, point: FieldPoint) -> Result<Vec<Resonance>> {
        let dilation = DilationParameter::for_gamma(point.gamma, self.angle)?;
        let solver = ResonanceSolver::with_operators(self.ops.clone(), dilation, self.solver);
        let mut levels = solver.solve(point, self.target)?;
        levels.retain(|r| r.energy.re >= self.window.0 && r.energy.re <= self.window.1);
        Ok(levels)
    }
}

/// Normalized Hermitian overlap of two coefficient vectors.
fn overlap(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return 0.0;
    }
    let n = norm2(a) * norm2(b);
    if n == 0.0 {
        0.0
    } else {
        dotc(a, b).norm() / n
    }
}

/// Solves every scan point and links the levels into tracks.
pub fn scan_with<S: LevelSource + ?Sized>(source: &S, config: &ScanConfig) -> Result<Spectrum> {
    config.validate()?;
    let gammas = config.gammas();
    let mut spectrum = Spectrum {
        ratio: config.ratio,
        gammas: gammas.clone(),
        ..Default::default()
    };
    // open tracks: id and last coefficient vector
    let mut open: Vec<(usize, Vec<Complex64>)> = Vec::new();
    let mut next_id = 0;
    let chunk = rayon::current_num_threads().max(1) * 2;
    for (c, block) in gammas.chunks(chunk).enumerate() {
        let solved: Vec<Result<Vec<Resonance>>> = block
            .par_iter()
            .map(|&g| source.levels(config.point(g)))
            .collect();
        for (k, levels) in solved.into_iter().enumerate() {
            let step = c * chunk + k;
            let gamma = gammas[step];
            let levels = levels.map_err(|e| Error::AtPoint {
                index: step,
                source: Box::new(e),
            })?;
            // greedy assignment by decreasing overlap
            let mut cand: Vec<(f64, usize, usize)> = Vec::new();
            for (i, (_, v)) in open.iter().enumerate() {
                for (j, r) in levels.iter().enumerate() {
                    cand.push((overlap(v, &r.coefficients), i, j));
                }
            }
            cand.sort_by(|a, b| b.0.total_cmp(&a.0));
            let mut track_of: Vec<Option<(usize, f64)>> = vec![None; levels.len()];
            let mut used = vec![false; open.len()];
            for &(s, i, j) in &cand {
                if s >= config.overlap_threshold && !used[i] && track_of[j].is_none() {
                    used[i] = true;
                    track_of[j] = Some((open[i].0, s));
                }
            }
            let mut next_open = Vec::with_capacity(levels.len());
            for (j, r) in levels.into_iter().enumerate() {
                let (track, ov) = match track_of[j] {
                    Some((id, s)) => (id, Some(s)),
                    None => {
                        let id = next_id;
                        next_id += 1;
                        if step > 0 {
                            let best = cand.iter().filter(|c| c.2 == j).map(|c| c.0).fold(0.0, f64::max);
                            spectrum.breaks.push(TrackBreak {
                                step,
                                gamma,
                                track: id,
                                best_overlap: best,
                            });
                        }
                        (id, None)
                    }
                };
                spectrum.points.push(SpectrumPoint {
                    step,
                    gamma,
                    f: gamma / config.ratio,
                    track,
                    energy: r.energy,
                    overlap: ov,
                });
                next_open.push((track, r.coefficients));
            }
            open = next_open;
        }
    }
    Ok(spectrum)
}

/// Hydrogen spectrum along the configured ray.
pub fn scan_spectrum(config: &ScanConfig) -> Result<Spectrum> {
    config.validate()?;
    scan_with(&HydrogenLevels::new(config), config)
}

/// A local minimum of the level distance between two neighbouring tracks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvoidedCrossing {
    pub gamma0: f64,
    pub f0: f64,
    /// Mean of the two levels at the minimum.
    pub energy_guess: Complex64,
    /// Interpolated minimum of `|Re E_a - Re E_b|`.
    pub gap: f64,
    /// `|Im E_a - Im E_b|` at the discrete minimum.
    pub imag_gap: f64,
    pub tracks: (usize, usize),
}

/// A crossing counts as avoided when its gap is below this fraction of the
/// local mean level spacing.
pub const CROSSING_THRESHOLD: f64 = 0.25;

/// Vertex of the parabola through three points.
fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> (f64, f64) {
    let d1 = (y[1] - y[0]) / (x[1] - x[0]);
    let d2 = (y[2] - y[1]) / (x[2] - x[1]);
    let a = (d2 - d1) / (x[2] - x[0]);
    if !(a > 0.0) {
        return (x[1], y[1]);
    }
    // y(x) = y0 + d1 (x - x0) + a (x - x0)(x - x1)
    let b = d1 - a * (x[0] + x[1]);
    let xv = (-b / (2.0 * a)).clamp(x[0], x[2]);
    let yv = y[0] + d1 * (xv - x[0]) + a * (xv - x[0]) * (xv - x[1]);
    (xv, yv.max(0.0))
}

/// Local minima of the distance between tracks that are neighbours in
/// `Re E`, sorted by gap.
pub fn detect_avoided_crossings(spectrum: &Spectrum) -> Vec<AvoidedCrossing> {
    let steps = spectrum.gammas.len();
    let mut energy: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    for p in &spectrum.points {
        energy.insert((p.track, p.step), p.energy);
    }
    let mut neighbours: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    let mut spacing = vec![f64::NAN; steps];
    for (step, sp) in spacing.iter_mut().enumerate() {
        let lv = spectrum.at_step(step);
        if lv.len() >= 2 {
            *sp = (lv[lv.len() - 1].energy.re - lv[0].energy.re) / (lv.len() - 1) as f64;
        }
        for w in lv.windows(2) {
            let key = (w[0].track.min(w[1].track), w[0].track.max(w[1].track));
            neighbours.entry(key).or_default().push(step);
        }
    }
    let gap = |a: usize, b: usize, s: usize| -> Option<f64> {
        Some((energy.get(&(a, s))?.re - energy.get(&(b, s))?.re).abs())
    };
    let mut out = Vec::new();
    for (&(a, b), adjacent_steps) in &neighbours {
        for &s in adjacent_steps {
            if s == 0 || s + 1 >= steps {
                continue;
            }
            let (Some(g0), Some(g1), Some(g2)) = (gap(a, b, s - 1), gap(a, b, s), gap(a, b, s + 1)) else {
                continue;
            };
            if !(g1 < g0 && g1 < g2) || !(g1 < CROSSING_THRESHOLD * spacing[s]) {
                continue;
            }
            let x = [spectrum.gammas[s - 1], spectrum.gammas[s], spectrum.gammas[s + 1]];
            let (gamma0, gmin) = parabola_vertex(x, [g0, g1, g2]);
            let (ea, eb) = (energy[&(a, s)], energy[&(b, s)]);
            out.push(AvoidedCrossing {
                gamma0,
                f0: gamma0 / spectrum.ratio,
                energy_guess: 0.5 * (ea + eb),
                gap: gmin,
                imag_gap: (ea.im - eb.im).abs(),
                tracks: (a, b),
            });
        }
    }
    out.sort_by(|p, q| p.gap.total_cmp(&q.gap));
    out
}
