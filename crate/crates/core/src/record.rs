//! Text formats: the line-oriented `key = value` search record and the
//! tab-separated tables written by the command-line tool. Floating-point
//! numbers carry 17 significant digits so they read back bit for bit.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::str::FromStr;

use num_complex::Complex64;

use crate::octagon::ModelCoefficients;
use crate::search::{EPRecord, IterationRecord, SearchStatus};
use crate::verification::ResonancePaths;
use crate::wavefunction::WaveGrid;
use crate::{Error, FieldPoint, Result};

/// Lossless decimal form of a double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// How the record was produced, enough to redo the solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecordMeta {
    pub n_max: usize,
    pub m: i32,
    pub b_modulus: f64,
    pub b_angle: f64,
    pub seed: FieldPoint,
    pub energy_guess: Complex64,
}

struct Writer {
    out: String,
}

impl Writer {
    fn line(&mut self, key: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.out, "{key} = {value}");
    }

    fn real(&mut self, key: &str, x: f64) {
        self.line(key, fmt_f64(x));
    }

    fn complex(&mut self, key: &str, z: Complex64) {
        self.real(&format!("{key}_re"), z.re);
        self.real(&format!("{key}_im"), z.im);
    }
}

const COEFF_KEYS: [&str; 9] = [
    "kappa0",
    "kappa_gamma",
    "kappa_f",
    "eta0",
    "eta_gamma",
    "eta_f",
    "eta_gg",
    "eta_gf",
    "eta_ff",
];

fn coeff_values(c: &ModelCoefficients) -> [Complex64; 9] {
    [
        c.kappa0,
        c.kappa_gamma,
        c.kappa_f,
        c.eta0,
        c.eta_gamma,
        c.eta_f,
        c.eta_gg,
        c.eta_gf,
        c.eta_ff,
    ]
}

/// Serializes a search record.
pub fn write_record(rec: &EPRecord, meta: &RecordMeta) -> String {
    let mut w = Writer { out: String::new() };
    w.out.push_str("# exceptional point search record\n");
    w.line("status", rec.status.as_str());
    w.real("gamma_ep", rec.position.gamma);
    w.real("f_ep", rec.position.f);
    w.complex("energy_ep", rec.energy);
    w.line("winding", rec.winding);
    w.line("exchange", rec.exchange);
    w.real("degeneracy_floor", rec.degeneracy_floor);
    w.line("n_max", meta.n_max);
    w.line("m", meta.m);
    w.real("b_modulus", meta.b_modulus);
    w.real("b_angle", meta.b_angle);
    w.real("seed_gamma", meta.seed.gamma);
    w.real("seed_f", meta.seed.f);
    w.complex("energy_guess", meta.energy_guess);
    w.line("iterations", rec.iterations.len());
    for (k, it) in rec.iterations.iter().enumerate() {
        let _ = writeln!(w.out, "\n[iteration {k}]");
        w.real("center_gamma", it.center.gamma);
        w.real("center_f", it.center.f);
        w.real("h_gamma", it.h_gamma);
        w.real("h_f", it.h_f);
        w.complex("e1", it.energies[0]);
        w.complex("e2", it.energies[1]);
        w.real("gap", it.gap);
        w.real("estimate_gamma", it.estimate.gamma);
        w.real("estimate_f", it.estimate.f);
        w.real("epsilon", it.epsilon);
        w.complex("energy_estimate", it.energy_estimate);
        for (key, z) in COEFF_KEYS.iter().zip(coeff_values(&it.coefficients)) {
            w.complex(key, z);
        }
        w.line("winding", it.winding.map_or("none".to_string(), |x| x.to_string()));
        w.line("exchange", it.exchange.map_or("none".to_string(), |x| x.to_string()));
        w.real("c_norm", it.c_norm);
        w.real("model_defect", it.model_defect);
    }
    w.out
}

struct Section<'a> {
    values: BTreeMap<&'a str, &'a str>,
    name: &'a str,
}

impl<'a> Section<'a> {
    fn raw(&self, key: &str) -> Result<&'a str> {
        self.values
            .get(key)
            .copied()
            .ok_or_else(|| Error::Parse(format!("missing key {key:?} in {}", self.name)))
    }

    fn parse<T: FromStr>(&self, key: &str) -> Result<T> {
        let s = self.raw(key)?;
        s.parse()
            .map_err(|_| Error::Parse(format!("bad value {s:?} for {key:?} in {}", self.name)))
    }

    fn complex(&self, key: &str) -> Result<Complex64> {
        Ok(Complex64::new(self.parse(&format!("{key}_re"))?, self.parse(&format!("{key}_im"))?))
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.raw(key)? {
            "none" => Ok(None),
            _ => self.parse(key).map(Some),
        }
    }
}

fn sections(text: &str) -> Result<Vec<Section<'_>>> {
    let mut out = vec![Section {
        values: BTreeMap::new(),
        name: "header",
    }];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            out.push(Section {
                values: BTreeMap::new(),
                name,
            });
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", lineno + 1)))?;
        out.last_mut().unwrap().values.insert(k.trim(), v.trim());
    }
    Ok(out)
}

/// Reads a record written by [`write_record`]. The tracked pair is not
/// stored and comes back as `None`.
pub fn parse_record(text: &str) -> Result<(EPRecord, RecordMeta)> {
    let secs = sections(text)?;
    let h = &secs[0];
    let meta = RecordMeta {
        n_max: h.parse("n_max")?,
        m: h.parse("m")?,
        b_modulus: h.parse("b_modulus")?,
        b_angle: h.parse("b_angle")?,
        seed: FieldPoint::new(h.parse("seed_gamma")?, h.parse("seed_f")?),
        energy_guess: h.complex("energy_guess")?,
    };
    let count: usize = h.parse("iterations")?;
    if secs.len() != count + 1 {
        return Err(Error::Parse(format!(
            "record announces {count} iterations but holds {}",
            secs.len() - 1
        )));
    }
    let iterations = secs[1..]
        .iter()
        .map(|s| -> Result<IterationRecord> {
            let center = FieldPoint::new(s.parse("center_gamma")?, s.parse("center_f")?);
            let (h_gamma, h_f) = (s.parse("h_gamma")?, s.parse("h_f")?);
            let c: Vec<Complex64> = COEFF_KEYS.iter().map(|k| s.complex(k)).collect::<Result<_>>()?;
            Ok(IterationRecord {
                center,
                h_gamma,
                h_f,
                energies: [s.complex("e1")?, s.complex("e2")?],
                gap: s.parse("gap")?,
                estimate: FieldPoint::new(s.parse("estimate_gamma")?, s.parse("estimate_f")?),
                epsilon: s.parse("epsilon")?,
                energy_estimate: s.complex("energy_estimate")?,
                coefficients: ModelCoefficients {
                    kappa0: c[0],
                    kappa_gamma: c[1],
                    kappa_f: c[2],
                    eta0: c[3],
                    eta_gamma: c[4],
                    eta_f: c[5],
                    eta_gg: c[6],
                    eta_gf: c[7],
                    eta_ff: c[8],
                    center,
                    h_gamma,
                    h_f,
                },
                winding: s.optional("winding")?,
                exchange: s.optional("exchange")?,
                c_norm: s.parse("c_norm")?,
                model_defect: s.parse("model_defect")?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let status: SearchStatus = h.parse::<String>("status")?.parse()?;
    let record = EPRecord {
        position: FieldPoint::new(h.parse("gamma_ep")?, h.parse("f_ep")?),
        energy: h.complex("energy_ep")?,
        winding: h.parse("winding")?,
        exchange: h.parse("exchange")?,
        status,
        degeneracy_floor: h.parse("degeneracy_floor")?,
        iterations,
        final_pair: None,
    };
    Ok((record, meta))
}

/// Per-iteration summary table.
pub fn iterations_tsv(rec: &EPRecord) -> String {
    let mut s = String::from(
        "# iteration\tgamma0\tf0\th_gamma\th_f\tgap\tgamma_estimate\tf_estimate\tRe E_EP\tIm E_EP\tepsilon\twinding\tc_norm\n",
    );
    for (k, it) in rec.iterations.iter().enumerate() {
        let _ = writeln!(
            s,
            "{k}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            fmt_f64(it.center.gamma),
            fmt_f64(it.center.f),
            fmt_f64(it.h_gamma),
            fmt_f64(it.h_f),
            fmt_f64(it.gap),
            fmt_f64(it.estimate.gamma),
            fmt_f64(it.estimate.f),
            fmt_f64(it.energy_estimate.re),
            fmt_f64(it.energy_estimate.im),
            fmt_f64(it.epsilon),
            it.winding.map_or("none".to_string(), |w| w.to_string()),
            fmt_f64(it.c_norm),
        );
    }
    s
}

/// Resonance paths as plot data: angle, energy, branch id.
pub fn paths_tsv(paths: &ResonancePaths) -> String {
    let mut s = String::from("# angle\tRe E\tIm E\tbranch\n");
    for (branch, values) in [(1, &paths.first), (2, &paths.second)] {
        for (phi, e) in paths.angles.iter().zip(values) {
            let _ = writeln!(s, "{}\t{}\t{}\t{branch}", fmt_f64(*phi), fmt_f64(e.re), fmt_f64(e.im));
        }
    }
    s
}

/// Density grid with `# key = value` metadata lines. Columns: `mu_r`,
/// `nu_r`, then one density per state.
pub fn wave_grid_text(grid: &WaveGrid, meta: &[(&str, String)], labels: &[&str]) -> String {
    let mut s = String::new();
    for (k, v) in meta {
        let _ = writeln!(s, "# {k} = {v}");
    }
    let _ = writeln!(s, "# phi = {}", fmt_f64(grid.phi));
    let _ = write!(s, "# mu_r\tnu_r");
    for l in labels {
        let _ = write!(s, "\t{l}");
    }
    s.push('\n');
    let nn = grid.nu_values.len();
    for (i, mu) in grid.mu_values.iter().enumerate() {
        for (j, nu) in grid.nu_values.iter().enumerate() {
            let _ = write!(s, "{}\t{}", fmt_f64(*mu), fmt_f64(*nu));
            for d in &grid.densities {
                let _ = write!(s, "\t{}", fmt_f64(d[i * nn + j]));
            }
            s.push('\n');
        }
    }
    s
}
