//! Command-line front-end for `l1weak-core`.
//!
//! [`dispatch`] parses an argument vector, runs one verb and writes its
//! outputs. CSV tables go to `--out` (standard output by default), JSON
//! reports to `--json` and SVG plots to `--svg`. The `tau` verb is JSON only
//! and prints to standard output when `--json` is absent. Diagnostics always
//! go to standard error.
//!
//! Exit codes: 0 on success, 2 on a usage error, 1 when the computation or
//! file handling fails.

mod input;
mod report;

use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use l1weak_core::experiments::round_half_up;
use l1weak_core::recovery::RECOVERY_TOL;
use l1weak_core::threshold::{alpha_bound, solve_theta, EpsilonSet, Side};
use l1weak_core::{
    alpha_w, classify_nsp, estimate_transition, framework_alpha_estimate, run_phase_grid,
    solve_bp, threshold_curve, verify_certificate, BpProblem, PhaseGrid, Regime, SupportPattern,
};

pub use input::{parse_grid, parse_matrix, parse_vector, read_matrix, read_vector};
pub use report::{
    emit_csv, emit_json, emit_svg, fmt_float, Metadata, ReportBundle, SvgCell, Table,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Io(String),
    #[error(transparent)]
    Core(#[from] l1weak_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "l1weak", version, about = "Weak thresholds of l1 minimization")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Weak threshold alpha_w(beta) at one beta or along a grid.
    Threshold(ThresholdArgs),
    /// Null-space certificate tau(A) for a support and sign pattern.
    Tau(TauArgs),
    /// Basis pursuit min ||x||_1 subject to Ax = y.
    Recover(RecoverArgs),
    /// Monte Carlo recovery rates over an (alpha, beta) grid.
    Phase(PhaseArgs),
    /// Finite-n estimate of the threshold from the Gaussian framework.
    Framework(FrameworkArgs),
}

#[derive(Debug, Args)]
pub struct ThresholdArgs {
    /// Single sparsity ratio k/n.
    #[arg(long, conflicts_with_all = ["beta_min", "beta_max", "steps"], required_unless_present = "beta_min")]
    pub beta: Option<f64>,
    #[arg(long, requires_all = ["beta_max", "steps"])]
    pub beta_min: Option<f64>,
    #[arg(long, requires = "beta_min")]
    pub beta_max: Option<f64>,
    #[arg(long, requires = "beta_min")]
    pub steps: Option<usize>,
    /// Nonnegative signals.
    #[arg(long)]
    pub signed: bool,
    #[command(flatten)]
    pub eps: EpsArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

/// Slack constants of the two-sided bounds. They only change the bound
/// columns of the JSON report.
#[derive(Debug, Args)]
pub struct EpsArgs {
    #[arg(long, default_value_t = 0.0)]
    pub eps1_c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps2_c: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps1_m: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps3_m: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps1_g: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps3_g: f64,
    #[arg(long, default_value_t = 0.0)]
    pub eps5_g: f64,
}

impl EpsArgs {
    fn to_set(&self) -> EpsilonSet {
        EpsilonSet {
            eps1_c: self.eps1_c,
            eps2_c: self.eps2_c,
            eps1_m: self.eps1_m,
            eps3_m: self.eps3_m,
            eps1_g: self.eps1_g,
            eps3_g: self.eps3_g,
            eps5_g: self.eps5_g,
        }
    }
}

#[derive(Debug, Args)]
pub struct TauArgs {
    /// Headerless CSV, one matrix row per line.
    #[arg(long)]
    pub matrix: PathBuf,
    /// 1-based support indices, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub support: Vec<usize>,
    /// Signs (+1/-1) of the support entries; all +1 when omitted.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub signs: Option<Vec<f64>>,
    #[arg(long)]
    pub signed: bool,
    /// Band around zero in which tau counts as zero.
    #[arg(long, default_value_t = l1weak_core::cert::NSP_TOL)]
    pub tol: f64,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecoverArgs {
    #[arg(long)]
    pub matrix: PathBuf,
    /// Measurements, one value per line or a single row.
    #[arg(long)]
    pub y: PathBuf,
    /// Add the constraint x >= 0.
    #[arg(long)]
    pub nonneg: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PhaseArgs {
    #[arg(long)]
    pub n: usize,
    /// `lo:hi:steps` grid of m/n.
    #[arg(long)]
    pub alpha_grid: String,
    /// `lo:hi:steps` grid of k/n.
    #[arg(long)]
    pub beta_grid: String,
    /// Trials per cell.
    #[arg(long)]
    pub trials: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub signed: bool,
    /// Worker threads, 0 for all cores. Does not change any output.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FrameworkArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub samples: usize,
    #[arg(long)]
    pub seed: u64,
    /// Worker threads, 0 for all cores. Does not change any output.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

/// Parse `argv` (program name first), run the verb and write its outputs.
/// Returns the process exit code and, on success, the produced report.
pub fn dispatch<I, T>(argv: I) -> (i32, Option<ReportBundle>)
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version are not errors.
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return (code, None);
        }
    };
    match run(&cli.command).and_then(|bundle| write_outputs(&cli.command, &bundle).map(|_| bundle)) {
        Ok(bundle) => (0, Some(bundle)),
        Err(e) => {
            eprintln!("l1weak: {e}");
            (e.exit_code(), None)
        }
    }
}

/// Compute the report for `command` without touching the file system
/// beyond reading its inputs.
pub fn run(command: &Command) -> Result<ReportBundle, CliError> {
    match command {
        Command::Threshold(a) => run_threshold(a),
        Command::Tau(a) => run_tau(a),
        Command::Recover(a) => run_recover(a),
        Command::Phase(a) => run_phase(a),
        Command::Framework(a) => run_framework(a),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn write_stdout(text: &str) -> Result<(), CliError> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|_| out.flush())
        .map_err(|e| CliError::Io(format!("standard output: {e}")))
}

fn write_outputs(command: &Command, bundle: &ReportBundle) -> Result<(), CliError> {
    let (out, json, svg) = match command {
        Command::Threshold(a) => (&a.out, &a.json, &a.svg),
        Command::Tau(a) => (&None, &a.json, &None),
        Command::Recover(a) => (&a.out, &a.json, &None),
        Command::Phase(a) => (&a.out, &a.json, &a.svg),
        Command::Framework(a) => (&a.out, &a.json, &None),
    };
    match (&bundle.csv, out) {
        (Some(csv), Some(path)) => write_file(path, csv)?,
        (Some(csv), None) => write_stdout(csv)?,
        (None, _) => {}
    }
    match json {
        Some(path) => write_file(path, &bundle.json)?,
        None if bundle.csv.is_none() => write_stdout(&bundle.json)?,
        None => {}
    }
    if let (Some(text), Some(path)) = (&bundle.svg, svg) {
        write_file(path, text)?;
    }
    Ok(())
}

fn regime_of(signed: bool) -> Regime {
    if signed {
        Regime::Signed
    } else {
        Regime::General
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn check_ratio(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(usage(format!("--{name} = {v} must lie in (0, 1)")))
    }
}

/// `α_w` at 199 evenly spaced `β` for the plots.
fn theory_polyline(regime: Regime) -> Result<Vec<(f64, f64)>, CliError> {
    let betas: Vec<f64> = (1..200).map(|i| i as f64 / 200.0).collect();
    Ok(threshold_curve(regime, &betas)?
        .iter()
        .map(|p| (p.beta, p.alpha))
        .collect())
}

fn run_threshold(a: &ThresholdArgs) -> Result<ReportBundle, CliError> {
    let regime = regime_of(a.signed);
    let betas = match (a.beta, a.beta_min, a.beta_max, a.steps) {
        (Some(b), ..) => vec![b],
        (None, Some(lo), Some(hi), Some(steps)) => {
            parse_grid(&format!("{}:{}:{}", fmt_float(lo), fmt_float(hi), steps))?
        }
        _ => return Err(usage("give --beta or all of --beta-min, --beta-max, --steps")),
    };
    for &b in &betas {
        check_ratio("beta", b)?;
    }
    let eps = a.eps.to_set();
    eps.validate().map_err(|e| usage(e.to_string()))?;

    let points = threshold_curve(regime, &betas)?;
    let mut table = Table::new(&["beta", "theta_hat", "alpha_w"]);
    let mut rows = Vec::with_capacity(points.len());
    for p in &points {
        table.push(vec![fmt_float(p.beta), fmt_float(p.theta_hat), fmt_float(p.alpha)]);
        let theta_lower = solve_theta(regime, p.beta, &eps, Side::Lower)?;
        let theta_upper = solve_theta(regime, p.beta, &eps, Side::Upper)?;
        rows.push(json!({
            "beta": p.beta,
            "theta_hat": p.theta_hat,
            "alpha_w": p.alpha,
            "theta_lower": theta_lower,
            "theta_upper": theta_upper,
            "alpha_lower": alpha_bound(regime, Side::Lower, p.beta, theta_lower, &eps)?,
            "alpha_upper": alpha_bound(regime, Side::Upper, p.beta, theta_upper, &eps)?,
        }));
    }
    let mut metadata = Metadata::new("threshold")
        .flag("root_rule", "first sign change of a 64-point scan, then bisection")
        .flag("eps5_g", "accepted but unused by the closed-form bounds")
        .flag("bare_eps_in_m_w", 0.0);
    metadata.regime = Some(regime.name());
    let body = json!({
        "metadata": metadata,
        "eps": eps,
        "points": rows,
    });
    let svg = a.svg.as_ref().map(|_| {
        let curve: Vec<(f64, f64)> = points.iter().map(|p| (p.beta, p.alpha)).collect();
        emit_svg(&format!("weak threshold ({regime})"), &curve, &[])
    });
    Ok(ReportBundle {
        csv: Some(emit_csv(&table)?),
        json: emit_json(&body),
        svg,
        metadata,
    })
}

fn run_tau(a: &TauArgs) -> Result<ReportBundle, CliError> {
    let regime = regime_of(a.signed);
    if !(a.tol >= 0.0) {
        return Err(usage("--tol must be nonnegative"));
    }
    let matrix = read_matrix(&a.matrix)?;
    let n = matrix.cols();
    if let Some(&bad) = a.support.iter().find(|&&i| i == 0 || i > n) {
        return Err(usage(format!("--support index {bad} is outside 1..={n}")));
    }
    let signs = match &a.signs {
        Some(s) if s.len() != a.support.len() => {
            return Err(usage(format!(
                "--signs has {} entries but --support has {}",
                s.len(),
                a.support.len()
            )))
        }
        Some(s) => s.clone(),
        None => vec![1.0; a.support.len()],
    };
    let support: Vec<usize> = a.support.iter().map(|i| i - 1).collect();
    let pattern = SupportPattern::new(n, support, signs, regime)?;
    let v = classify_nsp(&matrix, &pattern, a.tol)?;
    let verified = v
        .certificate
        .as_ref()
        .map(|c| verify_certificate(&matrix, &pattern, c));

    let mut metadata = Metadata::new("tau")
        .flag("support_base", 1)
        .flag("failure_requires_witness", true);
    metadata.regime = Some(regime.name());
    let cert = v.certificate.as_ref();
    let body = json!({
        "metadata": metadata,
        "m": matrix.rows(),
        "n": n,
        "support": a.support,
        "signs": pattern.signs(),
        "tau": v.tau,
        "z": cert.map(|c| c.z.clone()),
        "nu": cert.map(|c| c.nu.clone()),
        "w": cert.and_then(|c| c.w.clone()),
        "iterations": cert.map_or(0, |c| c.iterations),
        "converged": cert.is_none_or(|c| c.converged),
        "gap": cert.map_or(0.0, |c| c.gap),
        "verdict": v.verdict.name(),
        "tol": v.tol,
        "sphere_min": v.sphere_min.filter(|s| s.is_finite()),
        "verified": verified.map(|c| c.ok),
        "verify_reason": verified.and_then(|c| c.reason.map(|r| r.to_string())),
    });
    Ok(ReportBundle {
        csv: None,
        json: emit_json(&body),
        svg: None,
        metadata,
    })
}

fn run_recover(a: &RecoverArgs) -> Result<ReportBundle, CliError> {
    let regime = regime_of(a.nonneg);
    let matrix = read_matrix(&a.matrix)?;
    let y = read_vector(&a.y)?;
    let problem = BpProblem::new(matrix, y, regime)?;
    let sol = solve_bp(&problem)?;
    if !sol.converged {
        eprintln!(
            "l1weak: warning: solver stopped after {} iterations without converging",
            sol.iterations
        );
    }
    let mut table = Table::new(&["index", "x_hat"]);
    for (i, &x) in sol.x_hat.iter().enumerate() {
        table.push(vec![(i + 1).to_string(), fmt_float(x)]);
    }
    let mut metadata = Metadata::new("recover").flag("solver", "admm");
    metadata.regime = Some(regime.name());
    let body = json!({
        "metadata": metadata,
        "x_hat": sol.x_hat,
        "objective": sol.objective,
        "feas_residual": sol.feas_residual,
        "iterations": sol.iterations,
        "converged": sol.converged,
    });
    Ok(ReportBundle {
        csv: Some(emit_csv(&table)?),
        json: emit_json(&body),
        svg: None,
        metadata,
    })
}

/// Half the spacing of a grid, or `fallback` for a single value.
fn half_step(grid: &[f64], fallback: f64) -> f64 {
    grid.windows(2)
        .map(|w| 0.5 * (w[1] - w[0]))
        .fold(f64::INFINITY, f64::min)
        .min(fallback)
}

fn run_phase(a: &PhaseArgs) -> Result<ReportBundle, CliError> {
    let regime = regime_of(a.signed);
    let alphas = parse_grid(&a.alpha_grid)?;
    let betas = parse_grid(&a.beta_grid)?;
    for &v in &alphas {
        check_ratio("alpha-grid value", v)?;
    }
    for &v in &betas {
        check_ratio("beta-grid value", v)?;
    }
    if a.n < 2 {
        return Err(usage("--n must be at least 2"));
    }
    if a.trials == 0 {
        return Err(usage("--trials must be at least 1"));
    }
    let grid = PhaseGrid {
        n: a.n,
        alphas: alphas.clone(),
        betas: betas.clone(),
        trials_per_cell: a.trials,
        seed: a.seed,
        regime,
    };
    let cells = run_phase_grid(&grid, a.threads)?;

    let mut table = Table::new(&["alpha", "beta", "m", "k", "trials", "successes", "rate"]);
    for c in cells.iter().filter(|c| !c.skipped) {
        table.push(vec![
            fmt_float(c.alpha),
            fmt_float(c.beta),
            c.m.to_string(),
            c.k.to_string(),
            c.trials.to_string(),
            c.successes.to_string(),
            fmt_float(c.rate()),
        ]);
    }
    let transitions: Vec<Value> = betas
        .iter()
        .map(|&beta| {
            let row: Vec<_> = cells.iter().filter(|c| c.beta == beta).cloned().collect();
            let theory = alpha_w(regime, beta).map(|p| p.alpha).ok();
            match estimate_transition(&row) {
                Ok(est) => json!({"beta": beta, "alpha_w": theory, "estimate": est}),
                Err(e) => json!({"beta": beta, "alpha_w": theory, "estimate": null, "note": e.to_string()}),
            }
        })
        .collect();

    let mut metadata = Metadata::new("phase")
        .flag("rounding", "half up: m = round(alpha n), k = round(beta n)")
        .flag("recovery_tol", RECOVERY_TOL)
        .flag("skipped_cells_in_csv", false)
        .flag("rng", "ChaCha8 stream keyed by (seed, cell index, trial)");
    metadata.seed = Some(a.seed);
    metadata.regime = Some(regime.name());
    let body = json!({
        "metadata": metadata,
        "n": a.n,
        "trials_per_cell": a.trials,
        "cells": cells,
        "transitions": transitions,
    });

    let svg = match &a.svg {
        Some(_) => {
            let (hw, hh) = (half_step(&betas, 0.02), half_step(&alphas, 0.02));
            let shaded: Vec<SvgCell> = cells
                .iter()
                .filter(|c| !c.skipped)
                .map(|c| SvgCell {
                    beta: c.beta,
                    alpha: c.alpha,
                    rate: c.rate(),
                    half_width: hw,
                    half_height: hh,
                })
                .collect();
            let title = format!("recovery rate, n = {}, {} trials per cell ({regime})", a.n, a.trials);
            Some(emit_svg(&title, &theory_polyline(regime)?, &shaded))
        }
        None => None,
    };
    Ok(ReportBundle {
        csv: Some(emit_csv(&table)?),
        json: emit_json(&body),
        svg,
        metadata,
    })
}

fn run_framework(a: &FrameworkArgs) -> Result<ReportBundle, CliError> {
    check_ratio("beta", a.beta)?;
    if a.samples < 10 {
        return Err(usage("--samples must be at least 10"));
    }
    let k = round_half_up(a.beta * a.n as f64);
    if a.n < 2 || k >= a.n {
        return Err(usage(format!("need k = round(beta n) < n, got k = {k}, n = {}", a.n)));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads)
        .build()
        .map_err(|e| CliError::Io(format!("thread pool: {e}")))?;
    let est = pool.install(|| framework_alpha_estimate(a.n, k, a.samples, a.seed))?;
    let theory = alpha_w(Regime::General, a.beta)?.alpha;

    let mut table = Table::new(&["n", "beta", "samples", "alpha_estimate", "cw_over_n"]);
    table.push(vec![
        a.n.to_string(),
        fmt_float(a.beta),
        a.samples.to_string(),
        fmt_float(est.alpha_estimate),
        fmt_float(est.cw_over_n),
    ]);
    let mut metadata = Metadata::new("framework")
        .flag("head_z", "ones")
        .flag("tail_sign", "minus")
        .flag("cw_rule", "smallest qualifying c, else n-k-1")
        .flag("k_rounding", "half up");
    metadata.seed = Some(a.seed);
    metadata.regime = Some(Regime::General.name());
    let body = json!({
        "metadata": metadata,
        "n": a.n,
        "k": k,
        "beta": a.beta,
        "samples": a.samples,
        "alpha_estimate": est.alpha_estimate,
        "alpha_std": est.alpha_std,
        "cw_over_n": est.cw_over_n,
        "cw_std": est.cw_std,
        "alpha_w": theory,
    });
    Ok(ReportBundle {
        csv: Some(emit_csv(&table)?),
        json: emit_json(&body),
        svg: None,
        metadata,
    })
}
