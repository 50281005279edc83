//! Command-line front end. Every run writes its outputs and a manifest to
//! the output directory; errors end in one `ERROR <code>: <message>` line.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::basis::BasisSpec;
use crate::record::{fmt_f64, iterations_tsv, parse_record, paths_tsv, wave_grid_text, write_record, RecordMeta};
use crate::scanner::{detect_avoided_crossings, scan_spectrum, AvoidedCrossing, ScanConfig, Spectrum};
use crate::search::{find_ep_observed, SearchOptions};
use crate::spectral::{DilationParameter, PairSource, ResonanceSolver, SolverConfig, DEFAULT_ROTATION_ANGLE};
use crate::units::{reduced_to_si, Material};
use crate::verification::{certify, hard_verify, Certificate, LoopDiscretization, DEFAULT_LOOP_POINTS};
use crate::wavefunction::{averaged_vector, c_norm, c_normalized, density_grid, GridSpec};
use crate::{Error, FieldPoint, Result};

/// Octagon sampling has nine independent solves; more threads buy nothing.
pub const MAX_THREADS: usize = 9;

#[derive(Debug, Parser)]
#[command(name = "rydberg-ep", version, about = "Resonances and exceptional points of hydrogen-like systems in parallel fields")]
pub struct Cli {
    /// Worker threads (default: logical cores, at most 9).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Seed of the eigensolver start vectors.
    #[arg(long, global = true, default_value_t = 0x5eed)]
    pub seed: u64,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectrum along gamma/f = ratio and its avoided crossings.
    Scan(ScanArgs),
    /// Exceptional point search from an avoided-crossing seed.
    FindEp(FindEpArgs),
    /// Winding number and resonance paths of a stored search record.
    Verify(VerifyArgs),
    /// Densities of the pair at a stored exceptional point.
    Wavefunction(WaveArgs),
    /// Reduced units to laboratory units.
    Convert(ConvertArgs),
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub ratio: f64,
    #[arg(long)]
    pub gamma_min: f64,
    #[arg(long)]
    pub gamma_max: f64,
    #[arg(long)]
    pub steps: usize,
    #[arg(long)]
    pub nmax: usize,
    /// Window on Re E as `min,max`.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "-0.02,0")]
    pub window: (f64, f64),
    /// Resonances per point.
    #[arg(long, default_value_t = 12)]
    pub count: usize,
    #[arg(long, default_value_t = DEFAULT_ROTATION_ANGLE)]
    pub angle: f64,
}

#[derive(Debug, Args)]
pub struct FindEpArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub gamma: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub f: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub energy_re: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub energy_im: f64,
    #[arg(long)]
    pub nmax: usize,
    #[arg(long, default_value_t = DEFAULT_ROTATION_ANGLE)]
    pub angle: f64,
    /// Dilation modulus; defaults to the rule for the seed field.
    #[arg(long)]
    pub b_modulus: Option<f64>,
    #[arg(long, default_value_t = 40)]
    pub max_iterations: usize,
    #[arg(long, default_value_t = 1e-9)]
    pub degeneracy_floor: f64,
    #[arg(long, default_value_t = DEFAULT_LOOP_POINTS)]
    pub loop_points: usize,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub record: PathBuf,
    /// Also re-solve the full problem at points of the loop.
    #[arg(long)]
    pub hard: bool,
    /// Loop points of the hard check.
    #[arg(long, default_value_t = 16)]
    pub points: usize,
    #[arg(long, default_value_t = DEFAULT_LOOP_POINTS)]
    pub loop_points: usize,
}

#[derive(Debug, Args)]
pub struct WaveArgs {
    #[arg(long)]
    pub record: PathBuf,
    /// Add the density of the averaged eigenvector.
    #[arg(long)]
    pub average: bool,
    #[arg(long, default_value_t = 60.0)]
    pub mu_max: f64,
    #[arg(long, default_value_t = 60.0)]
    pub nu_max: f64,
    #[arg(long, default_value_t = 128)]
    pub points: usize,
    #[arg(long, default_value_t = 0.0)]
    pub phi: f64,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// `h` or `cu2o`.
    #[arg(long)]
    pub material: String,
    #[arg(long)]
    pub gamma: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub f: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub energy_re: Option<f64>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub energy_im: f64,
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected 'min,max', got '{s}'"))?;
    let a: f64 = a.trim().parse().map_err(|_| format!("bad number '{a}'"))?;
    let b: f64 = b.trim().parse().map_err(|_| format!("bad number '{b}'"))?;
    Ok((a, b))
}

/// Rounds for display: one decimal from 1 upward, two significant digits
/// below.
pub fn display_value(x: f64) -> String {
    if x.abs() >= 1.0 || x == 0.0 {
        format!("{x:.1}")
    } else {
        let digits = (1 - x.abs().log10().floor() as i32).max(0) as usize;
        format!("{x:.digits$}")
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
/// Normal output goes to `out`, the error line to `err`.
pub fn run<I, T>(args: I, out: &mut (dyn Write + Send), err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(out, "{e}");
                return 0;
            }
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
            let _ = writeln!(err, "ERROR Usage: {first}");
            return 2;
        }
    };
    let argv: Vec<String> = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, &argv, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "ERROR {}: {e}", e.code());
            1
        }
    }
}

fn thread_count(requested: Option<usize>) -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    requested.unwrap_or(cores).clamp(1, MAX_THREADS)
}

fn execute(cli: &Cli, argv: &[String], out: &mut (dyn Write + Send)) -> Result<()> {
    let threads = thread_count(cli.threads);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    std::fs::create_dir_all(&cli.out_dir)?;
    let mut manifest = Manifest::new(argv, threads, cli.seed);
    pool.install(|| match &cli.command {
        Command::Scan(a) => scan(a, cli, &mut manifest, out),
        Command::FindEp(a) => find_ep(a, cli, &mut manifest, out),
        Command::Verify(a) => verify(a, cli, &mut manifest, out),
        Command::Wavefunction(a) => wavefunction(a, cli, &mut manifest, out),
        Command::Convert(a) => convert(a, out),
    })?;
    if !matches!(cli.command, Command::Convert(_)) {
        manifest.write(&cli.out_dir)?;
    }
    Ok(())
}

/// Effective configuration of a run, written as `manifest.txt`.
struct Manifest {
    lines: Vec<(String, String)>,
}

impl Manifest {
    fn new(argv: &[String], threads: usize, seed: u64) -> Self {
        let mut m = Self { lines: Vec::new() };
        m.set("program", format!("rydberg-ep {}", env!("CARGO_PKG_VERSION")));
        m.set("args", argv.join("\t"));
        m.set("threads", threads);
        m.set("seed", seed);
        m
    }

    fn set(&mut self, key: &str, value: impl std::fmt::Display) {
        self.lines.push((key.to_string(), value.to_string()));
    }

    fn output(&mut self, path: &Path) {
        self.set("output", path.file_name().map_or(String::new(), |n| n.to_string_lossy().into_owned()));
    }

    fn write(&self, dir: &Path) -> Result<()> {
        let mut s = String::from("# run manifest; `args` holds the full tab-separated command line\n");
        for (k, v) in &self.lines {
            let _ = writeln!(s, "{k} = {v}");
        }
        std::fs::write(dir.join("manifest.txt"), s)?;
        Ok(())
    }
}

fn write_file(dir: &Path, name: &str, contents: &str, manifest: &mut Manifest) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents)?;
    manifest.output(&path);
    Ok(path)
}

fn solver_config(seed: u64, count: usize) -> SolverConfig {
    let mut cfg = SolverConfig {
        count,
        ..SolverConfig::default()
    };
    cfg.arnoldi.seed = seed;
    cfg
}

pub fn spectrum_tsv(spectrum: &Spectrum) -> String {
    let mut s = String::from("# gamma\tf\ttrack\tRe E\tIm E\n");
    for p in &spectrum.points {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}",
            fmt_f64(p.gamma),
            fmt_f64(p.f),
            p.track,
            fmt_f64(p.energy.re),
            fmt_f64(p.energy.im)
        );
    }
    s
}

pub fn crossings_tsv(crossings: &[AvoidedCrossing]) -> String {
    let mut s = String::from("# gamma0\tf0\tRe E\tIm E\tgap\timag_gap\ttrack_a\ttrack_b\n");
    for c in crossings {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            fmt_f64(c.gamma0),
            fmt_f64(c.f0),
            fmt_f64(c.energy_guess.re),
            fmt_f64(c.energy_guess.im),
            fmt_f64(c.gap),
            fmt_f64(c.imag_gap),
            c.tracks.0,
            c.tracks.1
        );
    }
    s
}

fn scan(a: &ScanArgs, cli: &Cli, manifest: &mut Manifest, out: &mut (dyn Write + Send)) -> Result<()> {
    let mut config = ScanConfig::new(a.ratio, (a.gamma_min, a.gamma_max), a.steps, BasisSpec::new(a.nmax, 0), a.window);
    config.track_count = a.count;
    config.angle = a.angle;
    config.validate()?;
    config.seed = cli.seed;
    let spectrum = scan_spectrum(&config)?;
    let crossings = detect_avoided_crossings(&spectrum);
    write_file(&cli.out_dir, "spectrum.tsv", &spectrum_tsv(&spectrum), manifest)?;
    write_file(&cli.out_dir, "crossings.tsv", &crossings_tsv(&crossings), manifest)?;
    manifest.set("track_breaks", spectrum.breaks.len());
    writeln!(
        out,
        "{} points on {} tracks, {} track breaks, {} avoided crossings",
        spectrum.points.len(),
        spectrum.tracks().len(),
        spectrum.breaks.len(),
        crossings.len()
    )?;
    for c in crossings.iter().take(10) {
        writeln!(
            out,
            "crossing gamma0 = {:.6e} f0 = {:.6e} Re E = {:.6e} gap = {:.3e}",
            c.gamma0, c.f0, c.energy_guess.re, c.gap
        )?;
    }
    Ok(())
}

fn find_ep(a: &FindEpArgs, cli: &Cli, manifest: &mut Manifest, out: &mut (dyn Write + Send)) -> Result<()> {
    let seed = FieldPoint::new(a.gamma, a.f);
    let modulus = match a.b_modulus {
        Some(b) => b,
        None if seed.gamma > 0.0 => DilationParameter::modulus_for_gamma(seed.gamma),
        None => return Err(Error::InvalidInput(format!("seed gamma {} must be positive", seed.gamma))),
    };
    let dilation = DilationParameter::new(modulus, a.angle)?;
    let spec = BasisSpec::new(a.nmax, 0);
    let solver = ResonanceSolver::new(spec, dilation, solver_config(cli.seed, SolverConfig::default().count));
    let options = SearchOptions {
        max_iterations: a.max_iterations,
        degeneracy_floor: a.degeneracy_floor,
        loop_points: a.loop_points,
        ..SearchOptions::default()
    };
    let guess = Complex64::new(a.energy_re, a.energy_im);
    let mut k = 0;
    let rec = find_ep_observed(&solver, seed, guess, &options, &mut |it| {
        let _ = writeln!(
            out,
            "iteration {k}: gamma0 = {:.10e} f0 = {:.10e} |E1-E2| = {:.3e} W = {}",
            it.center.gamma,
            it.center.f,
            it.gap,
            it.winding.map_or("-".into(), |w| w.to_string())
        );
        k += 1;
    })?;
    let meta = RecordMeta {
        n_max: a.nmax,
        m: 0,
        b_modulus: modulus,
        b_angle: a.angle,
        seed,
        energy_guess: guess,
    };
    manifest.set("b_modulus", fmt_f64(modulus));
    write_file(&cli.out_dir, "ep_record.txt", &write_record(&rec, &meta), manifest)?;
    write_file(&cli.out_dir, "iterations.tsv", &iterations_tsv(&rec), manifest)?;
    if let Some(coeffs) = rec.final_coefficients() {
        let lp = LoopDiscretization::around(coeffs, a.loop_points)?;
        match certify(coeffs, &lp) {
            Ok(cert) => {
                write_file(&cli.out_dir, "paths.tsv", &paths_tsv(&cert.paths), manifest)?;
                write_file(&cli.out_dir, "certificate.txt", &certificate_text(&cert), manifest)?;
            }
            Err(e) => writeln!(out, "final loop not certified: {e}")?,
        }
    }
    writeln!(out, "status = {}", rec.status.as_str())?;
    writeln!(out, "gamma_EP = {:.10e}", rec.position.gamma)?;
    writeln!(out, "f_EP = {:.10e}", rec.position.f)?;
    writeln!(out, "E_EP = {:.10e} {:+.10e} i", rec.energy.re, rec.energy.im)?;
    writeln!(out, "winding = {}", rec.winding)?;
    writeln!(out, "degeneracy_floor = {:.3e}", rec.degeneracy_floor)?;
    rec.into_result().map(|_| ())
}

fn certificate_text(cert: &Certificate) -> String {
    let (m1, m2) = cert.paths.endpoint_mismatch();
    format!(
        "winding = {}\nwinding_raw = {}\nloop_points = {}\nexchange = {}\nendpoint_mismatch_same = {}\nendpoint_mismatch_swapped = {}\nmax_half_gap = {}\n",
        cert.winding.value,
        fmt_f64(cert.winding.raw),
        cert.winding.n,
        cert.exchange,
        fmt_f64(m1),
        fmt_f64(m2),
        fmt_f64(cert.paths.max_half_gap())
    )
}

fn read_record(path: &Path) -> Result<(crate::search::EPRecord, RecordMeta)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_record(&text)
}

fn record_solver(meta: &RecordMeta, seed: u64) -> Result<ResonanceSolver> {
    let dilation = DilationParameter::new(meta.b_modulus, meta.b_angle)?;
    Ok(ResonanceSolver::new(
        BasisSpec::new(meta.n_max, meta.m),
        dilation,
        solver_config(seed, SolverConfig::default().count),
    ))
}

fn verify(a: &VerifyArgs, cli: &Cli, manifest: &mut Manifest, out: &mut (dyn Write + Send)) -> Result<()> {
    let (rec, meta) = read_record(&a.record)?;
    let last = rec
        .iterations
        .last()
        .ok_or_else(|| Error::Parse("record holds no iterations".into()))?;
    let coeffs = &last.coefficients;
    let lp = LoopDiscretization::around(coeffs, a.loop_points)?;
    let cert = certify(coeffs, &lp)?;
    write_file(&cli.out_dir, "paths.tsv", &paths_tsv(&cert.paths), manifest)?;
    let mut text = certificate_text(&cert);
    writeln!(out, "winding = {}", cert.winding.value)?;
    writeln!(out, "exchange = {}", cert.exchange)?;
    if a.hard {
        let solver = record_solver(&meta, cli.seed)?;
        let guess = 0.5 * (last.energies[0] + last.energies[1]);
        let reference = solver.seed_pair(last.center, guess)?;
        let check = hard_verify(&solver, coeffs, &reference, a.points)?;
        let _ = write!(
            text,
            "hard_points = {}\nhard_max_deviation = {}\nhard_bound = {}\nhard_passed = {}\nhard_swapped = {}\n",
            a.points,
            fmt_f64(check.max_deviation),
            fmt_f64(check.bound),
            check.passed,
            check.swapped
        );
        writeln!(
            out,
            "hard check: max deviation {:.3e} (bound {:.3e}) {}, swapped = {}",
            check.max_deviation,
            check.bound,
            if check.passed { "passed" } else { "FAILED" },
            check.swapped
        )?;
    }
    write_file(&cli.out_dir, "certificate.txt", &text, manifest)?;
    Ok(())
}

fn wavefunction(a: &WaveArgs, cli: &Cli, manifest: &mut Manifest, out: &mut (dyn Write + Send)) -> Result<()> {
    let (rec, meta) = read_record(&a.record)?;
    let solver = record_solver(&meta, cli.seed)?;
    let spec = BasisSpec::new(meta.n_max, meta.m);
    let pair = solver.seed_pair(rec.position, rec.energy)?;
    let v1 = c_normalized(&pair.first.coefficients, spec)?;
    let v2 = c_normalized(&pair.second.coefficients, spec)?;
    let mut states: Vec<Vec<Complex64>> = vec![v1, v2];
    let mut raw = vec![c_norm(&pair.first.coefficients, spec)?, c_norm(&pair.second.coefficients, spec)?];
    let mut labels = vec!["state1", "state2"];
    if a.average {
        let avg = averaged_vector(&pair.first.coefficients, &pair.second.coefficients)?;
        raw.push(c_norm(&avg, spec)?);
        states.push(c_normalized(&avg, spec)?);
        labels.push("average");
    }
    let grid = GridSpec {
        mu_max: a.mu_max,
        nu_max: a.nu_max,
        mu_points: a.points,
        nu_points: a.points,
        phi: a.phi,
    };
    let refs: Vec<&[Complex64]> = states.iter().map(|v| v.as_slice()).collect();
    let waves = density_grid(&refs, spec, solver.dilation, &grid)?;
    let e1 = pair.first.energy;
    let e2 = pair.second.energy;
    let meta_lines = vec![
        ("gamma", fmt_f64(rec.position.gamma)),
        ("f", fmt_f64(rec.position.f)),
        ("E1", format!("{} {}", fmt_f64(e1.re), fmt_f64(e1.im))),
        ("E2", format!("{} {}", fmt_f64(e2.re), fmt_f64(e2.im))),
        ("n_max", meta.n_max.to_string()),
        ("b_modulus", fmt_f64(meta.b_modulus)),
        ("b_angle", fmt_f64(meta.b_angle)),
        ("normalization", "c-norm".to_string()),
    ];
    write_file(&cli.out_dir, "wave_grid.tsv", &wave_grid_text(&waves, &meta_lines, &labels), manifest)?;
    for (k, label) in labels.iter().enumerate() {
        writeln!(
            out,
            "{label}: peak = {:.6e}, extent(90%) = {:.4}, raw c-norm = {:.3e}",
            waves.peak(k),
            waves.extent(k, 0.9),
            raw[k].norm()
        )?;
    }
    Ok(())
}

fn convert(a: &ConvertArgs, out: &mut (dyn Write + Send)) -> Result<()> {
    let material: Material = a.material.parse()?;
    let energy = Complex64::new(a.energy_re.unwrap_or(0.0), a.energy_im);
    let si = reduced_to_si(material, FieldPoint::new(a.gamma, a.f), energy);
    writeln!(out, "material = {}", material.name())?;
    writeln!(out, "B = {} T", display_value(si.tesla))?;
    writeln!(out, "F = {} V/cm", display_value(si.volts_per_cm))?;
    if a.energy_re.is_some() {
        writeln!(out, "E = {:.6e} {:+.6e} i eV", si.energy_ev.re, si.energy_ev.im)?;
    }
    writeln!(out, "B_tesla = {}", fmt_f64(si.tesla))?;
    writeln!(out, "F_volts_per_cm = {}", fmt_f64(si.volts_per_cm))?;
    if a.energy_re.is_some() {
        writeln!(out, "E_re_ev = {}", fmt_f64(si.energy_ev.re))?;
        writeln!(out, "E_im_ev = {}", fmt_f64(si.energy_ev.im))?;
    }
    Ok(())
}
