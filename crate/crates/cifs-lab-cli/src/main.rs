//! Command line harness for the `cifs-lab` library: audits, dimension
//! estimates, measure scans, parameter sweeps, and limit-set renders.
//!
//! Output contract: JSON reports `{command, config, results, seed,
//! wall_time_s}` for single runs, CSV with a header row for scans and sweeps,
//! binary PGM (P5) for renders. Exit code 0 on success, 2 when an audit
//! subcommand finds violations, 1 on errors. All randomness is seeded; the
//! seed is echoed in every JSON report, so every numeric result reproduces
//! bit-identically for an identical config (`wall_time_s` is the one
//! timing-dependent field).

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use cifs_lab::cifs::{
    distortion_audit, generator_derivative_range, osc_audit, sample_limit_set_budgeted,
    SystemConfig,
};
use cifs_lab::geometry::{
    case1_probe_ball, invert_disk, preimage_probe_ball, spectral_data, Disk, TauParam,
};
use cifs_lab::lattice::{count_quarter_disk, enumerate_indices, fit_growth_constants};
use cifs_lab::measure::{ball_mass_floor_scan, build_measure, packing_constants};
use cifs_lab::pressure::bowen_root;

#[derive(Parser)]
#[command(
    name = "cifs-lab",
    version,
    about = "Numerical laboratory for complex continued fraction systems",
    long_about = "Runs audits, dimension estimates, measure scans, and limit-set renders \
                  for the family of conformal iterated function systems generated by \
                  z -> 1/(z + b) over the lattice {m + n*tau}. Exit codes: 0 success, \
                  2 audit violations, 1 errors. Set CIFS_LAB_THREADS to cap parallelism."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct TauArgs {
    /// Real part of tau (must satisfy u >= 0).
    #[arg(long, default_value_t = 0.0)]
    tau_u: f64,
    /// Imaginary part of tau (must satisfy v >= 1).
    #[arg(long, default_value_t = 1.0)]
    tau_v: f64,
}

impl TauArgs {
    fn tau(&self) -> Result<TauParam, cifs_lab::Error> {
        TauParam::new(self.tau_u, self.tau_v)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Estimate the limit-set dimension as the root of the truncated
    /// partition sum.
    Dim {
        #[command(flatten)]
        tau: TauArgs,
        /// Index truncation: keep lattice points with |m + n*tau| <= this.
        #[arg(long, default_value_t = 30.0)]
        truncation: f64,
        /// Word length of the partition sum.
        #[arg(long, default_value_t = 1)]
        depth: u32,
        /// Bisection tolerance on the root bracket.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render finite-word coding points of the limit set to a PGM image.
    /// Word spaces larger than 4000000 are stride-subsampled to that budget.
    Render {
        #[command(flatten)]
        tau: TauArgs,
        /// Index truncation bound.
        #[arg(long, default_value_t = 200.0)]
        truncation: f64,
        /// Word length of the plotted sample.
        #[arg(long, default_value_t = 2)]
        depth: u32,
        /// Image width in pixels (square output, minimum 64).
        #[arg(long, default_value_t = 512)]
        width: u32,
        /// Output PGM path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Audit the quarter-disk lattice count bounds (R^2-7R+7)/2 <= N(R) <= R^2.
    AuditLattice {
        /// Check every integer radius R in [6, r_max].
        #[arg(long, default_value_t = 300)]
        r_max: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit disk inversion and the probe-ball inclusion lemmas on random
    /// inputs.
    AuditGeometry {
        #[command(flatten)]
        tau: TauArgs,
        /// Random trials per audit family.
        #[arg(long, default_value_t = 10000)]
        trials: u64,
        /// RNG seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Audit the CIFS axioms on a truncated system: open set condition,
    /// uniform contraction, bounded distortion.
    AuditCifs {
        #[command(flatten)]
        tau: TauArgs,
        /// Index truncation bound.
        #[arg(long, default_value_t = 20.0)]
        truncation: f64,
        /// Word length of the distortion search.
        #[arg(long, default_value_t = 2)]
        depth: u32,
        /// RNG seed (used only if the word space overflows the exhaustive cap).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Scan ball-mass lower bounds over the packing-case radius windows and
    /// emit one CSV row per (ball center, radius).
    MeasureScan {
        #[command(flatten)]
        tau: TauArgs,
        /// Index truncation bound.
        #[arg(long, default_value_t = 34.0)]
        truncation: f64,
        /// Cylinder refinement level of the measure.
        #[arg(long, default_value_t = 2)]
        level: u32,
        /// Dimension exponent; estimated via the partition-sum root when
        /// omitted.
        #[arg(long)]
        h: Option<f64>,
        /// Distortion constant; estimated via the distortion audit when
        /// omitted.
        #[arg(long)]
        k_hat: Option<f64>,
        /// Quarter-disk growth floor constant Q (count >= Q r^2); fitted
        /// when omitted.
        #[arg(long)]
        q_hat: Option<f64>,
        /// Quarter-disk growth ceiling constant C (count <= C r^2); fitted
        /// when omitted.
        #[arg(long)]
        c_hat: Option<f64>,
        /// Number of ball centers sampled from the index set.
        #[arg(long, default_value_t = 40)]
        sample: usize,
        /// Keep only centers with |m + n*tau| >= this.
        #[arg(long, default_value_t = 0.0)]
        min_b: f64,
        /// Radii scanned per center.
        #[arg(long, default_value_t = 8)]
        radii_per_b: usize,
        /// RNG seed for center sampling.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print spectral data and the packing-lemma constants for one tau.
    Constants {
        #[command(flatten)]
        tau: TauArgs,
        /// Distortion constant; estimated when omitted.
        #[arg(long)]
        k_hat: Option<f64>,
        /// Dimension exponent; estimated when omitted.
        #[arg(long)]
        h: Option<f64>,
        /// Quarter-disk growth floor constant Q (count >= Q r^2); fitted
        /// when omitted.
        #[arg(long)]
        q_hat: Option<f64>,
        /// Quarter-disk growth ceiling constant C (count <= C r^2); fitted
        /// when omitted.
        #[arg(long)]
        c_hat: Option<f64>,
        /// Index truncation bound for the empirical estimates.
        #[arg(long, default_value_t = 30.0)]
        truncation: f64,
        /// Word length for the empirical estimates.
        #[arg(long, default_value_t = 2)]
        depth: u32,
        /// RNG seed for the distortion audit.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep a grid over the tau half-strip and emit a CSV of dimension
    /// estimates.
    Sweep {
        /// Smallest u on the grid.
        #[arg(long, default_value_t = 0.0)]
        u_min: f64,
        /// Largest u on the grid.
        #[arg(long, default_value_t = 1.0)]
        u_max: f64,
        /// Number of u grid points (>= 1).
        #[arg(long, default_value_t = 3)]
        u_steps: u32,
        /// Smallest v on the grid.
        #[arg(long, default_value_t = 1.0)]
        v_min: f64,
        /// Largest v on the grid.
        #[arg(long, default_value_t = 2.0)]
        v_max: f64,
        /// Number of v grid points (>= 1).
        #[arg(long, default_value_t = 3)]
        v_steps: u32,
        /// Index truncation bound per cell.
        #[arg(long, default_value_t = 30.0)]
        truncation: f64,
        /// Word length per cell.
        #[arg(long, default_value_t = 1)]
        depth: u32,
        /// Bisection tolerance per cell.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Most coding points a render plots; larger word spaces are stride-sampled.
const RENDER_POINT_BUDGET: u64 = 4_000_000;

fn main() -> ExitCode {
    env_logger::init();
    if let Err(message) = init_thread_pool() {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(1)
        }
    }
}

/// `CIFS_LAB_THREADS` caps the global rayon pool; unset means the rayon
/// default.
fn init_thread_pool() -> Result<(), String> {
    let Ok(raw) = std::env::var("CIFS_LAB_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .parse()
        .ok()
        .filter(|&n| n >= 1)
        .ok_or_else(|| format!("CIFS_LAB_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|err| format!("failed to size the thread pool: {err}"))
}

type CliError = Box<dyn std::error::Error>;

fn run(command: Command) -> Result<u8, CliError> {
    match command {
        Command::Dim {
            tau,
            truncation,
            depth,
            tol,
            out,
        } => run_dim(tau, truncation, depth, tol, out),
        Command::Render {
            tau,
            truncation,
            depth,
            width,
            out,
        } => run_render(tau, truncation, depth, width, out),
        Command::AuditLattice { r_max, out } => run_audit_lattice(r_max, out),
        Command::AuditGeometry {
            tau,
            trials,
            seed,
            out,
        } => run_audit_geometry(tau, trials, seed, out),
        Command::AuditCifs {
            tau,
            truncation,
            depth,
            seed,
            out,
        } => run_audit_cifs(tau, truncation, depth, seed, out),
        Command::MeasureScan {
            tau,
            truncation,
            level,
            h,
            k_hat,
            q_hat,
            c_hat,
            sample,
            min_b,
            radii_per_b,
            seed,
            out,
        } => run_measure_scan(
            tau,
            truncation,
            level,
            h,
            k_hat,
            q_hat,
            c_hat,
            sample,
            min_b,
            radii_per_b,
            seed,
            out,
        ),
        Command::Constants {
            tau,
            k_hat,
            h,
            q_hat,
            c_hat,
            truncation,
            depth,
            seed,
            out,
        } => run_constants(tau, k_hat, h, q_hat, c_hat, truncation, depth, seed, out),
        Command::Sweep {
            u_min,
            u_max,
            u_steps,
            v_min,
            v_max,
            v_steps,
            truncation,
            depth,
            tol,
            out,
        } => run_sweep(
            u_min, u_max, u_steps, v_min, v_max, v_steps, truncation, depth, tol, out,
        ),
    }
}

fn report(command: &str, config: Value, results: Value, seed: u64, started: Instant) -> Value {
    json!({
        "command": command,
        "config": config,
        "results": results,
        "seed": seed,
        "wall_time_s": started.elapsed().as_secs_f64(),
    })
}

fn write_text(out: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => Ok(fs::write(path, text)
            .map_err(|err| format!("write {}: {err}", path.display()))?),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report(out: Option<&PathBuf>, report: &Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(report).expect("report serializes");
    text.push('\n');
    write_text(out, &text)
}

fn run_dim(
    tau: TauArgs,
    truncation: f64,
    depth: u32,
    tol: f64,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    let started = Instant::now();
    let tau = tau.tau()?;
    let estimate = bowen_root(tau, truncation, depth, tol)?;
    let report = report(
        "dim",
        json!({
            "tau_u": tau.u(), "tau_v": tau.v(),
            "truncation": truncation, "depth": depth, "tol": tol,
        }),
        json!({
            "h": estimate.h,
            "bracket": [estimate.bracket.0, estimate.bracket.1],
            "residual": estimate.residual,
        }),
        0,
        started,
    );
    emit_report(out.as_ref(), &report)?;
    Ok(0)
}

/// Viewport around `X = B(1/2, 1/2)`: re in [-0.05, 1.05], im in
/// [-0.55, 0.55]; square pixels, one splat per point.
fn run_render(
    tau: TauArgs,
    truncation: f64,
    depth: u32,
    width: u32,
    out: PathBuf,
) -> Result<u8, CliError> {
    if width < 64 {
        return Err("width must be >= 64".into());
    }
    let tau = tau.tau()?;
    let config = SystemConfig::new(tau, truncation, depth)?;
    let points = sample_limit_set_budgeted(&config, depth, RENDER_POINT_BUDGET)?;
    let w = width as usize;
    let mut pixels = vec![255u8; w * w];
    let span = 1.1;
    for point in points {
        let px = ((point.re + 0.05) / span * w as f64).floor();
        let py = ((0.55 - point.im) / span * w as f64).floor();
        let px = (px.max(0.0) as usize).min(w - 1);
        let py = (py.max(0.0) as usize).min(w - 1);
        pixels[py * w + px] = 0;
    }
    let mut file = std::io::BufWriter::new(
        fs::File::create(&out).map_err(|err| format!("create {}: {err}", out.display()))?,
    );
    write!(file, "P5\n{width} {width}\n255\n")
        .and_then(|()| file.write_all(&pixels))
        .map_err(|err| format!("write {}: {err}", out.display()))?;
    log::info!("rendered {} pixels to {}", w * w, out.display());
    Ok(0)
}

fn run_audit_lattice(r_max: u64, out: Option<PathBuf>) -> Result<u8, CliError> {
    let started = Instant::now();
    if r_max < 6 {
        return Err("r_max must be >= 6".into());
    }
    let mut violations: Vec<u64> = Vec::new();
    for r in 6..=r_max {
        let count = count_quarter_disk(r as f64);
        let lower = (r * r + 7).saturating_sub(7 * r);
        // (R^2 - 7R + 7)/2, rounded up, stays a valid integer lower bound.
        let lower = lower.div_ceil(2);
        if count < lower || count > r * r {
            violations.push(r);
        }
    }
    let spot_ok = count_quarter_disk(6.0) == 22 && count_quarter_disk(10.0) == 69;
    let ok = violations.is_empty() && spot_ok;
    let report = report(
        "audit-lattice",
        json!({ "r_max": r_max }),
        json!({
            "radii_checked": r_max - 5,
            "bound_violations": violations,
            "spot_checks_ok": spot_ok,
        }),
        0,
        started,
    );
    emit_report(out.as_ref(), &report)?;
    Ok(if ok { 0 } else { 2 })
}

fn sample_disk_rim(disk: &Disk, arms: u32) -> impl Iterator<Item = Complex64> + '_ {
    (0..arms).map(move |k| {
        let angle = 2.0 * std::f64::consts::PI * k as f64 / arms as f64;
        disk.boundary_point(angle)
    })
}

fn run_audit_geometry(
    tau: TauArgs,
    trials: u64,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    let started = Instant::now();
    let tau = tau.tau()?;
    let spectral = spectral_data(tau);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Inversion: the unit-circle reflection of a disk avoiding the origin is
    // again a disk; rim points must land on the image rim and a second
    // inversion must restore the original.
    let mut max_rim_err = 0.0_f64;
    let mut max_involution_err = 0.0_f64;
    for _ in 0..trials {
        let modulus = rng.gen_range(0.3..3.0);
        let angle = rng.gen_range(0.0..std::f64::consts::TAU);
        let center = Complex64::from_polar(modulus, angle);
        let disk = Disk::new(center, modulus * rng.gen_range(0.05..0.95))?;
        let image = invert_disk(&disk)?;
        for z in sample_disk_rim(&disk, 16) {
            let err = ((z.inv() - image.center).norm() - image.radius).abs() / image.radius;
            max_rim_err = max_rim_err.max(err);
        }
        let back = invert_disk(&image)?;
        let err = ((back.center - disk.center).norm() + (back.radius - disk.radius).abs())
            / disk.radius;
        max_involution_err = max_involution_err.max(err);
    }

    // Inclusion lemmas: probe balls must map inside their target balls under
    // the lattice frame map E.
    let mut inclusion_violations = 0u64;
    for _ in 0..trials {
        let target = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let radius = rng.gen_range(0.01..1.0);
        let probe = preimage_probe_ball(tau, target, radius)?;
        for z in sample_disk_rim(&probe, 8).chain([probe.center]) {
            if (spectral.apply_e(z) - target).norm() > radius + 1e-12 {
                inclusion_violations += 1;
            }
        }

        let w = Complex64::from_polar(
            rng.gen_range(1.0..40.0),
            rng.gen_range(0.0..std::f64::consts::TAU),
        );
        let r_bar = w.norm() * rng.gen_range(0.05..0.9);
        let m_factor = rng.gen_range(2.0..4.0);
        let probe = case1_probe_ball(tau, w, r_bar, m_factor)?;
        for z in sample_disk_rim(&probe, 8).chain([probe.center]) {
            let y = spectral.apply_e(z);
            if y.norm() > w.norm() + 1e-12 || (y - w).norm() > r_bar + 1e-12 {
                inclusion_violations += 1;
            }
        }
    }

    let ok = max_rim_err <= 1e-10 && max_involution_err <= 1e-9 && inclusion_violations == 0;
    let report = report(
        "audit-geometry",
        json!({ "tau_u": tau.u(), "tau_v": tau.v(), "trials": trials }),
        json!({
            "max_rim_error": max_rim_err,
            "max_involution_error": max_involution_err,
            "inclusion_violations": inclusion_violations,
        }),
        seed,
        started,
    );
    emit_report(out.as_ref(), &report)?;
    Ok(if ok { 0 } else { 2 })
}

fn run_audit_cifs(
    tau: TauArgs,
    truncation: f64,
    depth: u32,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    let started = Instant::now();
    let tau = tau.tau()?;
    let config = SystemConfig::new(tau, truncation, depth)?;
    let osc = osc_audit(&config)?;
    let sup_derivative = config
        .index_set()
        .points()
        .iter()
        .map(|&b| generator_derivative_range(b).max)
        .fold(0.0_f64, f64::max);
    let distortion = distortion_audit(&config, depth, seed)?;
    let ok = osc.violations.is_empty()
        && sup_derivative < 1.0
        && distortion.k_hat.is_finite()
        && distortion.contraction_hat < 1.0;
    let report = report(
        "audit-cifs",
        json!({
            "tau_u": tau.u(), "tau_v": tau.v(),
            "truncation": truncation, "depth": depth,
        }),
        json!({
            "indices": config.index_set().len(),
            "osc_pairs_checked": osc.pairs_checked,
            "osc_violations": osc.violations.len(),
            "sup_derivative": sup_derivative,
            "k_hat": distortion.k_hat,
            "contraction_hat": distortion.contraction_hat,
            "words_sampled": distortion.words_sampled,
            "witness": distortion.witness.iter().map(|i| [i.m(), i.n()]).collect::<Vec<_>>(),
        }),
        seed,
        started,
    );
    emit_report(out.as_ref(), &report)?;
    Ok(if ok { 0 } else { 2 })
}

#[allow(clippy::too_many_arguments)]
fn run_measure_scan(
    tau: TauArgs,
    truncation: f64,
    level: u32,
    h: Option<f64>,
    k_hat: Option<f64>,
    q_hat: Option<f64>,
    c_hat: Option<f64>,
    sample: usize,
    min_b: f64,
    radii_per_b: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    let tau = tau.tau()?;
    let k_hat = match k_hat {
        Some(k) => k,
        None => {
            let config = SystemConfig::new(tau, truncation, 2)?;
            distortion_audit(&config, 2, seed)?.k_hat
        }
    };
    let (q_hat, c_hat) = match (q_hat, c_hat) {
        (Some(q), Some(c)) => (q, c),
        _ => {
            let top = truncation.max(16.0);
            let grid: Vec<f64> = (0..12)
                .map(|k| 8.0 * (top / 8.0).powf(k as f64 / 11.0))
                .collect();
            let fit = fit_growth_constants(tau, &grid)?;
            // upper growth constant: count <= C r^2 over the audited grid
            let upper = fit
                .samples
                .iter()
                .map(|&(r, n)| n as f64 / (r * r))
                .fold(0.0_f64, f64::max);
            (q_hat.unwrap_or(fit.q_hat), c_hat.unwrap_or(upper))
        }
    };
    let h = match h {
        Some(h) => h,
        None => bowen_root(tau, truncation, level.min(2), 1e-9)?.h,
    };
    let constants = packing_constants(tau, k_hat, h, q_hat, c_hat)?;
    let measure = build_measure(tau, h, truncation, level)?;

    let set = enumerate_indices(tau, truncation)?;
    let mut candidates: Vec<usize> =
        (0..set.len()).filter(|&i| set.point(i).norm() >= min_b).collect();
    if candidates.is_empty() {
        return Err("no index satisfies the min_b filter".into());
    }
    // Seeded sample without replacement, reported in lattice order.
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = sample.min(candidates.len());
    for k in 0..take {
        let swap = rng.gen_range(k..candidates.len());
        candidates.swap(k, swap);
    }
    let mut b_sample: Vec<_> = candidates[..take].iter().map(|&i| set.get(i)).collect();
    b_sample.sort();

    let scan = ball_mass_floor_scan(&measure, &constants, &b_sample, radii_per_b)?;
    let mut csv = String::from("m,n,radius,case,lower,ratio\n");
    for row in &scan.samples {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.index.m(),
            row.index.n(),
            row.radius,
            row.case_id,
            row.lower,
            row.ratio
        ));
    }
    write_text(out.as_ref(), &csv)?;
    for case in &scan.cases {
        log::info!(
            "case {}: scanned {}, min ratio {:?}",
            case.case_id,
            case.scanned,
            case.min_ratio
        );
    }
    if !scan.skipped.is_empty() {
        log::warn!(
            "skipped {} centers whose image diameter exceeds the radius window",
            scan.skipped.len()
        );
    }
    let positive = scan.samples.iter().all(|row| row.ratio > 0.0);
    Ok(if positive { 0 } else { 2 })
}

#[allow(clippy::too_many_arguments)]
fn run_constants(
    tau: TauArgs,
    k_hat: Option<f64>,
    h: Option<f64>,
    q_hat: Option<f64>,
    c_hat: Option<f64>,
    truncation: f64,
    depth: u32,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    let started = Instant::now();
    let tau = tau.tau()?;
    let spectral = spectral_data(tau);
    let k_hat = match k_hat {
        Some(k) => k,
        None => {
            let config = SystemConfig::new(tau, truncation, depth)?;
            distortion_audit(&config, depth, seed)?.k_hat
        }
    };
    let (q_hat, c_hat) = match (q_hat, c_hat) {
        (Some(q), Some(c)) => (q, c),
        _ => {
            let top = truncation.max(16.0);
            let grid: Vec<f64> = (0..12)
                .map(|k| 8.0 * (top / 8.0).powf(k as f64 / 11.0))
                .collect();
            let fit = fit_growth_constants(tau, &grid)?;
            // upper growth constant: count <= C r^2 over the audited grid
            let upper = fit
                .samples
                .iter()
                .map(|&(r, n)| n as f64 / (r * r))
                .fold(0.0_f64, f64::max);
            (q_hat.unwrap_or(fit.q_hat), c_hat.unwrap_or(upper))
        }
    };
    let h = match h {
        Some(h) => h,
        None => bowen_root(tau, truncation, depth, 1e-9)?.h,
    };
    let packing = packing_constants(tau, k_hat, h, q_hat, c_hat)?;
    let report = report(
        "constants",
        json!({
            "tau_u": tau.u(), "tau_v": tau.v(),
            "truncation": truncation, "depth": depth,
            "k_hat": k_hat, "h": h, "q_hat": q_hat, "c_hat": c_hat,
        }),
        json!({
            "lambda1": spectral.lambda1,
            "lambda2": spectral.lambda2,
            "n_tau": spectral.n_tau,
            "q_prime": packing.q_prime,
            "c_prime": packing.c_prime,
            "r0": packing.r0,
            "xi": packing.xi,
            "gamma": packing.gamma,
            "r_big0": packing.r_big0,
            "l_prime": packing.l_prime,
            "l": packing.l,
        }),
        seed,
        started,
    );
    emit_report(out.as_ref(), &report)?;
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn run_sweep(
    u_min: f64,
    u_max: f64,
    u_steps: u32,
    v_min: f64,
    v_max: f64,
    v_steps: u32,
    truncation: f64,
    depth: u32,
    tol: f64,
    out: Option<PathBuf>,
) -> Result<u8, CliError> {
    if u_steps == 0 || v_steps == 0 {
        return Err("grid steps must be >= 1".into());
    }
    let grid_coord = |lo: f64, hi: f64, steps: u32, k: u32| {
        if steps == 1 {
            lo
        } else {
            lo + (hi - lo) * k as f64 / (steps - 1) as f64
        }
    };
    let mut cells = Vec::new();
    for i in 0..u_steps {
        for j in 0..v_steps {
            cells.push((
                grid_coord(u_min, u_max, u_steps, i),
                grid_coord(v_min, v_max, v_steps, j),
            ));
        }
    }
    // Cells are independent; estimate in parallel and write once, in grid
    // order.
    use rayon::prelude::*;
    let rows: Vec<String> = cells
        .par_iter()
        .map(|&(u, v)| match TauParam::new(u, v)
            .and_then(|tau| bowen_root(tau, truncation, depth, tol))
        {
            Ok(estimate) => format!("{u},{v},{},{}\n", estimate.h, estimate.residual),
            Err(err) => {
                log::warn!("sweep cell ({u}, {v}) failed: {err}");
                format!("{u},{v},nan,nan\n")
            }
        })
        .collect();
    let mut csv = String::from("u,v,h,residual\n");
    for row in rows {
        csv.push_str(&row);
    }
    write_text(out.as_ref(), &csv)?;
    Ok(0)
}
