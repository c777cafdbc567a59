use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use bosebridge::balance;
use bosebridge::compare;
use bosebridge::metrology;
use bosebridge::reduction;
use bosebridge::sweep::{self, Columns, SweepOptions};
use bosebridge::{BridgeConfig, BridgeError};

mod output;

use output::{fmt_num, fmt_opt, Report};

const DEFAULT_ALPHA: f64 = 1e4;

/// Simulate a four-mode bosonic Wheatstone bridge and the precision of its
/// unknown coupling.
#[derive(Parser)]
#[command(name = "bosebridge", version)]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Bridge parameters (flat TOML); defaults to the reference bridge
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Coherent amplitude of the mode-2 probe; overrides `alpha` in the config
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Output file; stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Worker threads for grid evaluations
    #[arg(long, global = true, env = "BOSEBRIDGE_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Precision of J_x over a grid of J_x values
    Sweep(SweepArgs),
    /// Estimate the hidden J_x by tuning J3 until the bridge balances
    Balance(BalanceArgs),
    /// Precision figures at the balance point
    Precision(PrecisionArgs),
    /// Closed-form results against the full four-mode model
    Compare,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    jx_min: f64,
    #[arg(long, default_value_t = 25.0, allow_negative_numbers = true)]
    jx_max: f64,
    #[arg(long, default_value_t = 201)]
    steps: usize,
    /// Probing time in relaxation times τ
    #[arg(long, default_value_t = 10.0)]
    horizon_mult: f64,
    #[arg(long, conflicts_with = "analytic_only")]
    numeric_only: bool,
    #[arg(long)]
    analytic_only: bool,
}

#[derive(Args)]
struct BalanceArgs {
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    j3_min: f64,
    #[arg(long, default_value_t = 15.0, allow_negative_numbers = true)]
    j3_max: f64,
    #[arg(long, default_value_t = 21)]
    steps: usize,
    /// Evolution time in relaxation times τ; long enough for off-balance settings to fade
    #[arg(long, default_value_t = 2000.0)]
    horizon_mult: f64,
}

#[derive(Args)]
struct PrecisionArgs {
    /// Probing time in relaxation times τ
    #[arg(long, default_value_t = 10.0)]
    horizon_mult: f64,
    /// Homodyne phase; the optimal phase when omitted
    #[arg(long, allow_negative_numbers = true)]
    phi: Option<f64>,
}

/// Failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let code = match error.downcast_ref::<BridgeError>() {
            Some(BridgeError::InconclusiveSweep(_)) => 2,
            _ => 1,
        };
        Self { code, error }
    }
}

impl From<BridgeError> for Failure {
    fn from(e: BridgeError) -> Self {
        anyhow::Error::from(e).into()
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(n) = cli.common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let (config, file_alpha) = load_config(cli.common.config.as_deref())?;
    let alpha = cli.common.alpha.or(file_alpha).unwrap_or(DEFAULT_ALPHA);
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(anyhow::anyhow!("--alpha must be positive and finite, got {alpha}").into());
    }

    let mut report = Report::new(&config, alpha);
    match cli.command {
        Command::Sweep(args) => run_sweep(&config, alpha, &args, &mut report)?,
        Command::Balance(args) => {
            // write whatever profile exists before reporting an inconclusive sweep
            let outcome = run_balance(&config, alpha, &args, &mut report);
            emit(&report, cli.common.out.as_deref())?;
            return outcome;
        }
        Command::Precision(args) => run_precision(&config, alpha, &args, &mut report)?,
        Command::Compare => run_compare(&config, alpha, &mut report)?,
    }
    emit(&report, cli.common.out.as_deref())?;
    Ok(())
}

fn load_config(path: Option<&Path>) -> anyhow::Result<(BridgeConfig, Option<f64>)> {
    let Some(path) = path else {
        return Ok((BridgeConfig::reference(), None));
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let parsed = BridgeConfig::from_toml_str(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    Ok(parsed)
}

fn emit(report: &Report, out: Option<&Path>) -> anyhow::Result<()> {
    let bytes = report.to_bytes()?;
    match out {
        Some(path) => fs::write(path, bytes).with_context(|| format!("writing {}", path.display())),
        None => io::stdout().write_all(&bytes).context("writing to stdout"),
    }
}

fn run_sweep(
    config: &BridgeConfig,
    alpha: f64,
    args: &SweepArgs,
    report: &mut Report,
) -> anyhow::Result<()> {
    let columns = match (args.numeric_only, args.analytic_only) {
        (true, _) => Columns::NumericOnly,
        (_, true) => Columns::AnalyticOnly,
        _ => Columns::Both,
    };
    let opts = SweepOptions {
        jx_min: args.jx_min,
        jx_max: args.jx_max,
        steps: args.steps,
        alpha,
        horizon_mult: args.horizon_mult,
        columns,
    };
    let result = sweep::run_sweep(config, &opts)?;
    report.meta("command", "sweep");
    report.meta("horizon_mult", fmt_num(args.horizon_mult));
    report.meta("t", fmt_num(result.t));
    report.meta("balance_jx", fmt_num(result.balance_jx));
    if let Some(min) = result.minimum() {
        report.meta("minimum_jx", fmt_num(min.jx));
    }
    report.header(&[
        "jx",
        "delta_analytic",
        "delta_numeric",
        "log10_delta",
        "balanced",
    ]);
    for r in &result.rows {
        report.row(vec![
            fmt_num(r.jx),
            fmt_opt(r.delta_analytic),
            fmt_opt(r.delta_numeric),
            fmt_opt(Some(r.log10_delta).filter(|v| !v.is_nan())),
            u8::from(r.balanced).to_string(),
        ]);
    }
    Ok(())
}

fn run_balance(
    config: &BridgeConfig,
    alpha: f64,
    args: &BalanceArgs,
    report: &mut Report,
) -> Result<(), Failure> {
    if args.steps < 3 {
        return Err(anyhow::anyhow!("--steps must be at least 3").into());
    }
    if args.j3_max.partial_cmp(&args.j3_min) != Some(std::cmp::Ordering::Greater) {
        return Err(anyhow::anyhow!("--j3-max must exceed --j3-min").into());
    }
    let span = args.j3_max - args.j3_min;
    let last = (args.steps - 1) as f64;
    let grid: Vec<f64> = (0..args.steps)
        .map(|i| args.j3_min + span * i as f64 / last)
        .collect();
    let t = args.horizon_mult * reduction::relaxation_time(config);
    report.meta("command", "balance");
    report.meta("horizon_mult", fmt_num(args.horizon_mult));
    report.meta("t", fmt_num(t));

    let estimate = balance::estimate_jx(config, &grid, alpha, t);
    let (status, profile) = match &estimate {
        Ok(e) => {
            report.meta("jx_estimate", fmt_num(e.jx));
            report.meta("j3_peak", fmt_num(e.j3_peak));
            ("ok", e.profile.clone())
        }
        Err(BridgeError::InconclusiveSweep(at)) => {
            report.meta("inconclusive_at_j3", fmt_num(*at));
            ("inconclusive", Vec::new())
        }
        Err(_) => ("error", Vec::new()),
    };
    report.meta("status", status);
    report.header(&["j3", "envelope", "envelope_over_alpha"]);
    for (j3, m) in profile {
        report.row(vec![fmt_num(j3), fmt_num(m), fmt_num(m / alpha)]);
    }
    estimate.map(|_| ()).map_err(Failure::from)
}

fn run_precision(
    config: &BridgeConfig,
    alpha: f64,
    args: &PrecisionArgs,
    report: &mut Report,
) -> anyhow::Result<()> {
    if !config.is_balanced(reduction::BALANCE_TOL) {
        bail!(BridgeError::NotBalanced(format!(
            "Jx - J2 J3/J1 = {:.3e}",
            config.balance_offset()
        )));
    }
    let t = args.horizon_mult * reduction::relaxation_time(config);
    let p = metrology::precision_report(config, alpha, t, args.phi)?;
    let numeric = metrology::numeric_optimal_precision(config, alpha, t)?;
    report.meta("command", "precision");
    report.meta("horizon_mult", fmt_num(args.horizon_mult));
    report.meta("t", fmt_num(t));
    report.header(&["quantity", "value", "log10_value"]);
    let rows = [
        ("phi2", p.phi2),
        ("delta_homodyne", p.delta_homodyne),
        ("delta_homodyne_optimal", p.delta_homodyne_optimal),
        ("delta_numeric_optimal", numeric),
        ("qfi", p.qfi),
        ("crb", p.crb),
        ("g", p.g),
        ("f", p.fluctuations.f),
        ("f_c", p.fluctuations.f_c),
        ("f_c_prime", p.fluctuations.f_c_prime),
    ];
    for (name, v) in rows {
        let log = if name.starts_with("delta") || name == "crb" {
            fmt_opt(Some(v.log10()))
        } else {
            String::new()
        };
        report.row(vec![name.to_string(), fmt_num(v), log]);
    }
    Ok(())
}

fn run_compare(config: &BridgeConfig, alpha: f64, report: &mut Report) -> anyhow::Result<()> {
    let r = compare::run_compare(config, alpha)?;
    report.meta("command", "compare");
    report.meta("t", fmt_num(r.t));
    report.meta("balanced", r.balanced.to_string());
    report.header(&["quantity", "numeric", "analytic", "deviation", "note"]);
    for row in &r.rows {
        report.row(vec![
            row.quantity.clone(),
            fmt_num(row.numeric),
            fmt_num(row.analytic),
            fmt_num(row.deviation),
            row.note.clone(),
        ]);
    }
    Ok(())
}
