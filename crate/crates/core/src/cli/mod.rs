//! Command-line front end: `generate`, `run`, `sweep` and `compare`.
//!
//! Every subcommand also accepts `--config <file>`, a plain `key = value`
//! file whose keys are flag names without the leading dashes. Flags given on
//! the command line win over the file. Exit codes: 0 success, 2 usage error
//! or unknown policy, 3 bad input file, 4 simulation invariant violated.

pub mod sweep;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};
use thiserror::Error;

use crate::engine::{self, write_event_log, EngineConfig, SimError};
use crate::metrics::{self, MetricsReport, DOMINANCE_TOLERANCE};
use crate::schedulers::PolicyName;
use crate::workload::{self, read_trace, write_trace, WeightModel, Workload, WorkloadParams};

pub use sweep::{cell_seed, run_sweep, write_sweep_csv, SweepGrid, SweepRow};

#[derive(Debug, Parser)]
#[command(name = "fairsched", version, about = "Fair size-based scheduling simulator")]
#[command(args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, clap::Args)]
pub struct WorkloadArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub n_jobs: usize,
    /// Weibull shape of job sizes (below 1 is heavy-tailed).
    #[arg(long, default_value_t = 1.0)]
    pub shape: f64,
    /// Log-normal estimation error spread.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.9)]
    pub load: f64,
    #[arg(long, default_value_t = 1.0)]
    pub mean_size: f64,
    /// Centre of the error factor: `median` (exp(sigma Z) as drawn) or `mean`.
    #[arg(long, default_value = "median")]
    pub error_bias: String,
    /// `uniform` or `value:prob,...`, e.g. `1:0.8,4:0.2`.
    #[arg(long, default_value = "uniform")]
    pub weights: String,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic workload trace.
    Generate {
        #[command(flatten)]
        workload: WorkloadArgs,
        /// Output trace (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Simulate one policy on a trace and emit per-job results.
    Run {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        policy: String,
        /// Per-job CSV (stdout if absent).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the `time,kind,job_id` event log here.
        #[arg(long)]
        log_events: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Mean sojourn time normalized against PS over a shape × sigma grid.
    Sweep {
        /// Comma-separated Weibull shapes (default: 8 log-spaced in [0.125, 4]).
        #[arg(long)]
        shape: Option<String>,
        /// Comma-separated sigmas (default: 0 to 3 in steps of 0.25).
        #[arg(long)]
        sigma: Option<String>,
        /// Replications per grid point.
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        /// Master seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        n_jobs: usize,
        #[arg(long, default_value_t = 0.9)]
        load: f64,
        /// Comma-separated policy names.
        #[arg(long, default_value = "ps,srpt,srpte,fsp,psbs")]
        policy: String,
        #[arg(long, default_value = "median")]
        error_bias: String,
        #[arg(long, default_value = "uniform")]
        weights: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Check whether one policy dominates another on a trace.
    Compare {
        #[arg(long)]
        trace: PathBuf,
        /// Candidate policy.
        #[arg(long)]
        policy: String,
        /// Reference policy.
        #[arg(long, default_value = "ps")]
        reference: String,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        CliError::Internal(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Input(format!("config line {}: expected key = value", i + 1)))?;
        out.push((k.trim().replace('_', "-"), v.trim().to_string()));
    }
    Ok(out)
}

/// Splices config-file entries in front of the command-line flags so the
/// latter override them. Keys the subcommand does not accept are ignored.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let mut path = None;
    let mut rest = Vec::with_capacity(args.len());
    let mut iter = args.into_iter();
    while let Some(arg) = iter.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            path = Some(PathBuf::from(
                iter.next().ok_or_else(|| usage("--config needs a file"))?,
            ));
        } else if let Some(p) = s.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(arg);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    let entries = parse_config(&text)?;
    let Some(sub_pos) = rest.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(rest);
    };
    let sub_pos = sub_pos + 1;
    let command = Cli::command();
    let Some(sub) = command.find_subcommand(rest[sub_pos].to_string_lossy().as_ref()) else {
        return Ok(rest);
    };
    let accepted: Vec<String> = sub
        .get_arguments()
        .filter_map(|a| a.get_long().map(str::to_string))
        .collect();
    let mut injected = Vec::new();
    for (k, v) in entries {
        if accepted.contains(&k) && k != "config" {
            injected.push(OsString::from(format!("--{k}")));
            injected.push(OsString::from(v));
        }
    }
    rest.splice(sub_pos + 1..sub_pos + 1, injected);
    Ok(rest)
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| usage(format!("bad {what} `{p}`"))))
        .collect()
}

fn parse_policies(s: &str) -> Result<Vec<PolicyName>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(usage))
        .collect()
}

fn load_trace(path: &Path) -> Result<Workload, CliError> {
    let file = File::open(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    read_trace(io::BufReader::new(file)).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn open_out<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> Result<Box<dyn Write + 'a>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn cmd_generate(args: &WorkloadArgs, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let weight_model: WeightModel = args.weights.parse().map_err(usage)?;
    let params = WorkloadParams {
        n_jobs: args.n_jobs,
        shape: args.shape,
        mean_size: args.mean_size,
        load: args.load,
        sigma: args.sigma,
        error_bias: args.error_bias.parse().map_err(usage)?,
        weight_model,
        seed: args.seed,
    };
    let w = workload::generate(&params).map_err(usage)?;
    let sink = open_out(out, stdout)?;
    write_trace(&w, sink).map_err(|e| CliError::Input(e.to_string()))
}

fn cmd_run(
    trace: &Path,
    policy: &str,
    out: Option<&Path>,
    log_events: Option<&Path>,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let policy: PolicyName = policy.parse().map_err(usage)?;
    let w = load_trace(trace)?;
    let mut scheduler = policy.build(&w)?;
    let cfg = EngineConfig {
        log_events: log_events.is_some(),
        ..Default::default()
    };
    let result = engine::run_with(&w, &mut scheduler, &cfg)?;
    {
        let mut csv = csv::Writer::from_writer(open_out(out, stdout)?);
        csv.write_record(["id", "release", "size", "estimate", "weight", "completion", "sojourn"])
            .map_err(io::Error::from)?;
        for j in w.jobs() {
            let r = result.record(j.id).expect("every job completes");
            csv.write_record([
                j.id.to_string(),
                j.release.to_string(),
                j.size.to_string(),
                j.estimate.to_string(),
                j.weight.to_string(),
                r.completion.to_string(),
                r.sojourn.to_string(),
            ])
            .map_err(io::Error::from)?;
        }
        csv.flush()?;
    }
    if let (Some(path), Some(events)) = (log_events, result.events.as_deref()) {
        write_event_log(events, BufWriter::new(File::create(path)?))?;
    }
    if !w.is_empty() {
        let report = MetricsReport::new(&w, &result, None).map_err(|e| CliError::Internal(e.to_string()))?;
        writeln!(
            stderr,
            "policy={} jobs={} mst={} makespan={}",
            policy,
            w.len(),
            report.mst,
            report.makespan
        )?;
    }
    Ok(())
}

fn cmd_sweep(grid: &SweepGrid, out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), CliError> {
    let rows = run_sweep(grid).map_err(|e| match e {
        sweep::SweepError::EmptyAxis(_) | sweep::SweepError::Workload { .. } => usage(e),
        other => CliError::Internal(other.to_string()),
    })?;
    write_sweep_csv(&rows, open_out(out, stdout)?)?;
    Ok(())
}

/// Dominance report of `candidate` against `reference` on one workload.
pub fn compare_report(
    workload: &Workload,
    candidate: &PolicyName,
    reference: &PolicyName,
) -> Result<String, CliError> {
    let mut a = candidate.build(workload)?;
    let mut b = reference.build(workload)?;
    let ra = engine::run(workload, &mut a)?;
    let rb = engine::run(workload, &mut b)?;
    let violations = metrics::dominance_violations(&ra, &rb, DOMINANCE_TOLERANCE)
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let mut out = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(out, "candidate: {candidate}");
    let _ = writeln!(out, "reference: {reference}");
    let _ = writeln!(out, "jobs: {}", workload.len());
    let _ = writeln!(
        out,
        "dominates: {}, {} violations",
        if violations.is_empty() { "yes" } else { "no" },
        violations.len()
    );
    if !workload.is_empty() {
        let ma = metrics::mean_sojourn(&ra).map_err(|e| CliError::Internal(e.to_string()))?;
        let mb = metrics::mean_sojourn(&rb).map_err(|e| CliError::Internal(e.to_string()))?;
        let _ = writeln!(out, "mst: {ma} vs {mb} (ratio {})", ma / mb);
    }
    for v in &violations {
        let _ = writeln!(
            out,
            "violation: job={} candidate={} reference={}",
            v.job_id, v.candidate, v.reference
        );
    }
    Ok(out)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Generate { workload, out, .. } => cmd_generate(&workload, out.as_deref(), stdout),
        Command::Run {
            trace,
            policy,
            out,
            log_events,
            ..
        } => cmd_run(&trace, &policy, out.as_deref(), log_events.as_deref(), stdout, stderr),
        Command::Sweep {
            shape,
            sigma,
            seeds,
            seed,
            n_jobs,
            load,
            policy,
            error_bias,
            weights,
            out,
            ..
        } => {
            let grid = SweepGrid {
                shapes: match shape {
                    Some(s) => parse_list(&s, "shape")?,
                    None => sweep::default_shapes(),
                },
                sigmas: match sigma {
                    Some(s) => parse_list(&s, "sigma")?,
                    None => sweep::default_sigmas(),
                },
                seeds,
                master_seed: seed,
                n_jobs,
                load,
                error_bias: error_bias.parse().map_err(usage)?,
                weight_model: weights.parse().map_err(usage)?,
                policies: parse_policies(&policy)?,
            };
            cmd_sweep(&grid, out.as_deref(), stdout)
        }
        Command::Compare {
            trace,
            policy,
            reference,
            ..
        } => {
            let candidate: PolicyName = policy.parse().map_err(usage)?;
            let reference: PolicyName = reference.parse().map_err(usage)?;
            let w = load_trace(&trace)?;
            let report = compare_report(&w, &candidate, &reference)?;
            stdout.write_all(report.as_bytes())?;
            Ok(())
        }
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let report = |stderr: &mut dyn Write, e: CliError| {
        let _ = writeln!(stderr, "error: {e}");
        e.exit_code()
    };
    let args = match expand_config(args) {
        Ok(args) => args,
        Err(e) => return report(stderr, e),
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap uses 0 for --help/--version and 2 for usage errors
            let _ = write!(stderr, "{}", e.render());
            return e.exit_code();
        }
    };
    match dispatch(cli, stdout, stderr) {
        Ok(()) => 0,
        Err(e) => report(stderr, e),
    }
}
