//! Batch command-line front end: parses channel specs, dispatches the
//! computations, and emits deterministic CSV. Human-readable summaries go to
//! standard error, CSV to standard output or a file, never mixed.
//!
//! Exit codes: 0 success, 1 input error, 2 non-converged best effort,
//! 3 invariant violation.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use crate::capacity::{
    capacity_closed_form_binary_uniform, capacity_grid_oracle, capacity_numeric,
    cutset_bound_binary_uniform, direct_link_capacity, OptimizerOptions, QuantizerDesign,
};
use crate::channel::{
    bsc_relay, bsc_relay_with_rate, parse_spec, relay_link_capacity, RelayChannelSpec,
};
use crate::converse::verify_converse_bound;
use crate::error::Error;
use crate::info::Channel;
use crate::sim::{simulate, DecoderKind, SimConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_NONCONVERGED: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

/// Render a real with 12 significant digits.
pub fn sig12(x: f64) -> String {
    format!("{x:.11e}")
}

#[derive(Debug, Parser)]
#[command(
    name = "modsum",
    version,
    about = "Capacities, bounds, and simulations for modulo-sum relay channels"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the relay channel capacity for one instance
    Capacity(CapacityArgs),
    /// Sweep parameter grids and emit capacity/bound curves as CSV
    Sweep(SweepArgs),
    /// Exhaustively verify the converse inequality at a small blocklength
    VerifyConverse(VerifyConverseArgs),
    /// Monte Carlo simulation of the quantize-and-forward scheme
    Simulate(SimulateArgs),
    /// Capacity of the relay link alone
    R0(R0Args),
}

/// Channel selection shared by all subcommands: either a JSON spec file or
/// the binary shorthand.
#[derive(Debug, Args, Clone)]
pub struct SpecArgs {
    /// Path to a JSON channel spec file
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Binary shorthand: noise parameter p (Z ~ Ber(p))
    #[arg(long)]
    pub p: Option<f64>,
    /// Binary shorthand: relay observation crossover delta
    #[arg(long)]
    pub delta: Option<f64>,
    /// Binary shorthand: relay link BSC crossover epsilon
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Binary shorthand: explicit relay link rate (alternative to --epsilon)
    #[arg(long)]
    pub r0: Option<f64>,
}

impl SpecArgs {
    fn resolve(&self) -> Result<RelayChannelSpec, CliError> {
        if let Some(path) = &self.spec {
            if self.p.is_some()
                || self.delta.is_some()
                || self.epsilon.is_some()
                || self.r0.is_some()
            {
                return Err(CliError::input(
                    "--spec conflicts with the --p/--delta/--epsilon/--r0 shorthand",
                ));
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
            return parse_spec(&text).map_err(CliError::from);
        }
        let p = self.p.unwrap_or(0.5);
        let delta = self.delta.unwrap_or(0.1);
        match (self.epsilon, self.r0) {
            (Some(_), Some(_)) => Err(CliError::input("--epsilon conflicts with --r0")),
            (Some(eps), None) => bsc_relay(p, delta, eps).map_err(CliError::from),
            (None, Some(r0)) => bsc_relay_with_rate(p, delta, r0).map_err(CliError::from),
            (None, None) => Err(CliError::input(
                "provide --spec, --epsilon, or --r0 to define the relay link",
            )),
        }
    }

    fn shorthand_columns(&self) -> (String, String, String) {
        let fmt = |v: Option<f64>| v.map(sig12).unwrap_or_default();
        (
            fmt(self.p.or(Some(0.5)).filter(|_| self.spec.is_none())),
            fmt(self.delta.or(Some(0.1)).filter(|_| self.spec.is_none())),
            fmt(self.epsilon),
        )
    }
}

#[derive(Debug, Args)]
pub struct CapacityArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Optimizer seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Numerical tolerance for the relay-link capacity
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    /// Use the exhaustive grid oracle at this simplex resolution instead of
    /// the alternating optimizer (small alphabets only)
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Write CSV here instead of standard output
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Grid for the explicit link rate, "start:stop:step" or a single value
    #[arg(long)]
    pub r0: Option<String>,
    /// Grid for the link BSC crossover (alternative to --r0)
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Grid for the relay observation crossover
    #[arg(long, default_value = "0.1")]
    pub delta: String,
    /// Grid for the noise parameter
    #[arg(long, default_value = "0.5")]
    pub p: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyConverseArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Blocklength
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Blocklength
    #[arg(long)]
    pub n: usize,
    /// Message rate in bits per use
    #[arg(long)]
    pub rate: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Decoder: ml or typ
    #[arg(long, default_value = "ml")]
    pub decoder: String,
    /// Strong-typicality slack per symbol-pair frequency
    /// (default 0.05 + 1/sqrt(n))
    #[arg(long)]
    pub typ_tol: Option<f64>,
    /// Margin added to I(U;Y1) when sizing the U codebook
    #[arg(long, default_value_t = 0.1)]
    pub u_margin: f64,
    /// Replace the optimized quantizer by a constant U (no relay aid)
    #[arg(long, default_value_t = false)]
    pub constant_u: bool,
    /// Skip the pipe-rate feasibility check
    #[arg(long, default_value_t = false)]
    pub no_pipe_check: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct R0Args {
    #[command(flatten)]
    pub spec: SpecArgs,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a subcommand produced: CSV bytes, a human summary, a target path,
/// and the exit code.
#[derive(Debug)]
pub struct RunOutput {
    pub csv: String,
    pub summary: String,
    pub out_path: Option<PathBuf>,
    pub code: i32,
}

#[derive(Debug)]
pub struct CliError {
    pub message: String,
    pub code: i32,
}

impl CliError {
    fn input(msg: impl Into<String>) -> Self {
        Self {
            message: msg.into(),
            code: EXIT_INPUT,
        }
    }

    fn invariant(msg: impl Into<String>) -> Self {
        Self {
            message: msg.into(),
            code: EXIT_INVARIANT,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConverged { .. } => EXIT_NONCONVERGED,
            _ => EXIT_INPUT,
        };
        Self {
            message: e.to_string(),
            code,
        }
    }
}

/// Inclusive numeric grid "start:stop:step", or a single value.
#[derive(Debug, Clone)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |t: &str| -> Result<f64, String> {
            t.trim()
                .parse::<f64>()
                .map_err(|e| format!("grid '{s}': {e}"))
        };
        let grid = match parts.as_slice() {
            [v] => {
                let v = parse(v)?;
                GridSpec {
                    start: v,
                    stop: v,
                    step: 1.0,
                }
            }
            [a, b, c] => GridSpec {
                start: parse(a)?,
                stop: parse(b)?,
                step: parse(c)?,
            },
            _ => return Err(format!("grid '{s}': expected 'value' or 'start:stop:step'")),
        };
        if !grid.start.is_finite() || !grid.stop.is_finite() {
            return Err(format!("grid '{s}': endpoints must be finite"));
        }
        if grid.step.is_nan() || grid.step <= 0.0 {
            return Err(format!("grid '{s}': step must be > 0"));
        }
        if grid.start > grid.stop {
            return Err(format!("grid '{s}': start must be <= stop"));
        }
        Ok(grid)
    }
}

impl GridSpec {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.start + i as f64 * self.step)
            .collect()
    }
}

/// Sweep description: per-parameter grids plus output target.
#[derive(Debug)]
pub struct SweepSpec {
    pub r0: Option<GridSpec>,
    pub epsilon: Option<GridSpec>,
    pub delta: GridSpec,
    pub p: GridSpec,
    pub seed: u64,
    pub tol: f64,
}

impl SweepSpec {
    fn from_args(args: &SweepArgs) -> Result<Self, CliError> {
        let parse_grid = |s: &str| GridSpec::from_str(s).map_err(CliError::input);
        let r0 = args.r0.as_deref().map(parse_grid).transpose()?;
        let epsilon = args.epsilon.as_deref().map(parse_grid).transpose()?;
        if r0.is_some() == epsilon.is_some() {
            return Err(CliError::input(
                "sweep: provide exactly one of --r0 or --epsilon",
            ));
        }
        Ok(Self {
            r0,
            epsilon,
            delta: parse_grid(&args.delta)?,
            p: parse_grid(&args.p)?,
            seed: args.seed,
            tol: args.tol,
        })
    }
}

/// Dispatch a parsed command line. Pure: all output is returned.
pub fn run(cli: &Cli) -> RunOutput {
    let result = match &cli.command {
        Command::Capacity(args) => cmd_capacity(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::VerifyConverse(args) => cmd_verify_converse(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::R0(args) => cmd_r0(args),
    };
    match result {
        Ok(out) => out,
        Err(e) => RunOutput {
            csv: String::new(),
            summary: format!("error: {}\n", e.message),
            out_path: None,
            code: e.code,
        },
    }
}

fn optimizer_options(seed: u64, tol: f64) -> OptimizerOptions {
    OptimizerOptions {
        seed,
        link_tol: tol.min(1e-10),
        ..OptimizerOptions::default()
    }
}

fn cmd_capacity(args: &CapacityArgs) -> Result<RunOutput, CliError> {
    let spec = args.spec.resolve()?;
    let report = match args.resolution {
        Some(resolution) => capacity_grid_oracle(&spec, resolution)?,
        None => capacity_numeric(&spec, &optimizer_options(args.seed, args.tol))?,
    };
    let (p_col, d_col, e_col) = args.spec.shorthand_columns();
    let mut csv = String::from(
        "r0,delta,p,epsilon,capacity,quantizer_rate,quantizer_distortion,constraint_slack,method,restarts,converged\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{},{}",
        sig12(report.r0_used),
        d_col,
        p_col,
        e_col,
        sig12(report.capacity),
        sig12(report.quantizer.rate()),
        sig12(report.quantizer.distortion()),
        sig12(report.constraint_slack),
        report.method.as_str(),
        report.restarts_used,
        report.converged
    );
    let summary = format!(
        "capacity {} bits at R0 {} ({}, {} restarts, converged: {})\n",
        sig12(report.capacity),
        sig12(report.r0_used),
        report.method.as_str(),
        report.restarts_used,
        report.converged
    );
    Ok(RunOutput {
        csv,
        summary,
        out_path: args.out.clone(),
        code: if report.converged {
            EXIT_OK
        } else {
            EXIT_NONCONVERGED
        },
    })
}

fn cmd_sweep(args: &SweepArgs) -> Result<RunOutput, CliError> {
    let sweep = SweepSpec::from_args(args)?;
    let opts = optimizer_options(sweep.seed, sweep.tol);
    let mut csv = String::from(
        "r0,delta,p,epsilon,capacity_numeric,capacity_closed_form,cutset_bound,direct_link,gap\n",
    );
    let mut all_converged = true;
    let link_axis: Vec<(Option<f64>, Option<f64>)> = match (&sweep.r0, &sweep.epsilon) {
        (Some(g), None) => g.points().into_iter().map(|v| (Some(v), None)).collect(),
        (None, Some(g)) => g.points().into_iter().map(|v| (None, Some(v))).collect(),
        _ => unreachable!("validated in from_args"),
    };
    for (r0_opt, eps_opt) in &link_axis {
        for delta in sweep.delta.points() {
            for p in sweep.p.points() {
                let spec = match (r0_opt, eps_opt) {
                    (Some(r0), None) => bsc_relay_with_rate(p, delta, *r0)?,
                    (None, Some(eps)) => bsc_relay(p, delta, *eps)?,
                    _ => unreachable!(),
                };
                let report = capacity_numeric(&spec, &opts)?;
                all_converged &= report.converged;
                let r0_eff = report.r0_used;
                let closed = capacity_closed_form_binary_uniform(r0_eff.min(1.0), delta)?;
                let cutset = cutset_bound_binary_uniform(r0_eff, delta)?;
                let direct = direct_link_capacity(&spec);
                let gap = cutset - report.capacity;
                // Cross-module consistency, enforced at emission.
                let cap = report.capacity;
                if cap < direct - 1e-9 || cap > (direct + r0_eff).min(spec.log2_m()) + 1e-6 {
                    return Err(CliError::invariant(format!(
                        "sweep row (r0={r0_eff}, delta={delta}, p={p}): capacity {cap} violates \
                         direct-link/rate sandwich [{direct}, {}]",
                        (direct + r0_eff).min(spec.log2_m())
                    )));
                }
                if p == 0.5 && cap > cutset + 1e-6 {
                    return Err(CliError::invariant(format!(
                        "sweep row (r0={r0_eff}, delta={delta}, p={p}): capacity {cap} exceeds \
                         cut-set bound {cutset}"
                    )));
                }
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{},{},{},{},{}",
                    sig12(r0_eff),
                    sig12(delta),
                    sig12(p),
                    eps_opt.map(sig12).unwrap_or_default(),
                    sig12(cap),
                    sig12(closed),
                    sig12(cutset),
                    sig12(direct),
                    sig12(gap)
                );
            }
        }
    }
    let rows = csv.lines().count() - 1;
    Ok(RunOutput {
        csv,
        summary: format!("sweep: {rows} rows\n"),
        out_path: args.out.clone(),
        code: if all_converged {
            EXIT_OK
        } else {
            EXIT_NONCONVERGED
        },
    })
}

fn cmd_verify_converse(args: &VerifyConverseArgs) -> Result<RunOutput, CliError> {
    let spec = args.spec.resolve()?;
    let report = verify_converse_bound(&spec, args.n, false)?;
    let mut csv = String::from("n,encoder_count,min_conditional_entropy,bound,pass,bound_method\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{}",
        report.n,
        report.encoder_count,
        sig12(report.min_conditional_entropy),
        sig12(report.bound),
        report.pass,
        report.bound_method.as_str()
    );
    let summary = format!(
        "converse at n={}: min H(Z^n|S^n) {} vs bound {} over {} encoders -> {}\n\
         worst encoder table: {:?}\n",
        report.n,
        sig12(report.min_conditional_entropy),
        sig12(report.bound),
        report.encoder_count,
        if report.pass { "pass" } else { "VIOLATION" },
        report.worst_encoder.map()
    );
    Ok(RunOutput {
        csv,
        summary,
        out_path: args.out.clone(),
        code: if report.pass { EXIT_OK } else { EXIT_INVARIANT },
    })
}

fn cmd_simulate(args: &SimulateArgs) -> Result<RunOutput, CliError> {
    let spec = args.spec.resolve()?;
    let decoder = match args.decoder.as_str() {
        "ml" => DecoderKind::MaxLikelihood,
        "typ" => DecoderKind::Typicality,
        other => return Err(CliError::input(format!("unknown decoder '{other}'"))),
    };
    let quantizer = if args.constant_u {
        let rows = vec![vec![1.0]; spec.y1_size()];
        QuantizerDesign::new(Channel::new(rows)?, &spec)?
    } else {
        capacity_numeric(&spec, &optimizer_options(args.seed, 1e-10))?.quantizer
    };
    let mut config = SimConfig::new(args.n, args.rate, quantizer);
    config.trials = args.trials;
    config.seed = args.seed;
    config.decoder = decoder;
    config.u_rate_margin = args.u_margin;
    config.enforce_pipe_rate = !args.no_pipe_check;
    if let Some(t) = args.typ_tol {
        config.typ_tol = t;
    }
    let report = simulate(&spec, &config)?;
    let mut csv = String::from(
        "n,rate,trials,seed,decoder,block_error,ci_low,ci_high,e_quant_fail,e_decode\n",
    );
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{},{},{}",
        config.n,
        sig12(config.rate),
        config.trials,
        config.seed,
        config.decoder.as_str(),
        sig12(report.block_error_rate),
        sig12(report.wilson_ci95.0),
        sig12(report.wilson_ci95.1),
        report.quantize_failures,
        report.decode_errors
    );
    let summary = format!(
        "block error {} (95% CI [{}, {}]) over {} trials; quantize failures {}\n",
        sig12(report.block_error_rate),
        sig12(report.wilson_ci95.0),
        sig12(report.wilson_ci95.1),
        report.trials_run,
        report.quantize_failures
    );
    Ok(RunOutput {
        csv,
        summary,
        out_path: args.out.clone(),
        code: EXIT_OK,
    })
}

fn cmd_r0(args: &R0Args) -> Result<RunOutput, CliError> {
    let spec = args.spec.resolve()?;
    let r0 = relay_link_capacity(&spec, args.tol)?;
    Ok(RunOutput {
        csv: format!("{}\n", sig12(r0)),
        summary: String::new(),
        out_path: args.out.clone(),
        code: EXIT_OK,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_line(line: &[&str]) -> RunOutput {
        let mut argv = vec!["modsum"];
        argv.extend_from_slice(line);
        run(&Cli::try_parse_from(argv).unwrap())
    }

    fn csv_field(csv: &str, row: usize, col: usize) -> String {
        csv.lines()
            .nth(row + 1)
            .unwrap()
            .split(',')
            .nth(col)
            .unwrap()
            .to_string()
    }

    #[test]
    fn capacity_shorthand_examples() {
        let out = run_line(&["capacity", "--p", "0.5", "--delta", "0", "--r0", "1"]);
        assert_eq!(out.code, EXIT_OK);
        let cap: f64 = csv_field(&out.csv, 0, 4).parse().unwrap();
        assert!((cap - 1.0).abs() < 1e-9);

        let out = run_line(&["capacity", "--p", "0.5", "--delta", "0.5", "--r0", "0.9"]);
        let cap: f64 = csv_field(&out.csv, 0, 4).parse().unwrap();
        assert!(cap.abs() < 1e-9);
    }

    #[test]
    fn conflicting_link_flags_are_input_errors() {
        let out = run_line(&["capacity", "--epsilon", "0.1", "--r0", "0.5"]);
        assert_eq!(out.code, EXIT_INPUT);
        let out = run_line(&["capacity"]);
        assert_eq!(out.code, EXIT_INPUT);
    }

    #[test]
    fn r0_examples() {
        let out = run_line(&["r0", "--epsilon", "0"]);
        assert_eq!(out.csv.trim().parse::<f64>().unwrap(), 1.0);
        let out = run_line(&["r0", "--epsilon", "0.5"]);
        assert!(out.csv.trim().parse::<f64>().unwrap().abs() < 1e-12);
        let out = run_line(&["r0", "--epsilon", "0.11"]);
        assert!((out.csv.trim().parse::<f64>().unwrap() - 0.50008404183547200).abs() < 1e-9);
    }

    #[test]
    fn grid_parsing() {
        let g = GridSpec::from_str("0.1:0.5:0.2").unwrap();
        assert_eq!(g.points(), vec![0.1, 0.30000000000000004, 0.5]);
        let g = GridSpec::from_str("0.7").unwrap();
        assert_eq!(g.points(), vec![0.7]);
        assert!(GridSpec::from_str("1:0:0.1").is_err());
        assert!(GridSpec::from_str("0:1:0").is_err());
        assert!(GridSpec::from_str("a:b").is_err());
    }

    #[test]
    fn sweep_delta_zero_has_zero_gap() {
        let out = run_line(&["sweep", "--r0", "0.2:0.8:0.3", "--delta", "0", "--p", "0.5"]);
        assert_eq!(out.code, EXIT_OK);
        for row in 0..out.csv.lines().count() - 1 {
            let gap: f64 = csv_field(&out.csv, row, 8).parse().unwrap();
            assert!(gap.abs() < 1e-6, "row {row}: gap {gap}");
        }
    }

    #[test]
    fn sweep_requires_exactly_one_link_axis() {
        let out = run_line(&["sweep", "--r0", "0.5", "--epsilon", "0.1"]);
        assert_eq!(out.code, EXIT_INPUT);
        let out = run_line(&["sweep"]);
        assert_eq!(out.code, EXIT_INPUT);
    }

    #[test]
    fn simulate_rejects_unknown_decoder() {
        let out = run_line(&[
            "simulate",
            "--r0",
            "0.5",
            "--n",
            "4",
            "--rate",
            "0.25",
            "--decoder",
            "magic",
        ]);
        assert_eq!(out.code, EXIT_INPUT);
    }
}
