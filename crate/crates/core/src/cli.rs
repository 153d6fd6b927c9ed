//! Command-line front end.
//!
//! Exit codes: 0 on success, 1 for usage or configuration errors, 2 when a
//! valid configuration fails at run time.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bounds::{
    ducb_upper_bound, gamma_for_horizon, regret_lower_bound, swucb_upper_bound, tau_for_horizon,
    BoundInputs, GapProfile,
};
use crate::config::ExperimentConfig;
use crate::environment::{
    build_synthetic_schedule, linear_base_vector, write_schedule_csv, PerturbationSpec, StartPhase,
};
use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::harness::{run_experiment, ExperimentResult};
use crate::model::AttractionVector;
use crate::policies::DEFAULT_EPSILON;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

pub const REGRET_HEADER: &str = "policy,step,mean_cum_regret,stderr";

#[derive(Debug, Parser)]
#[command(
    name = "nscascade",
    version,
    about = "Non-stationary cascade bandit simulator"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment described by a JSON config and write regret curves.
    Run(RunArgs),
    /// Print regret bounds and the discount/window schedules.
    Bounds(BoundsArgs),
    /// Generate a synthetic perturbation schedule.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Worker threads; 0 uses all cores. Does not affect results.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
    /// Also write per-epoch regret statistics here.
    #[arg(long)]
    pub epochs: Option<PathBuf>,
    /// Also write every run's thinned trace here.
    #[arg(long)]
    pub traces: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long = "L")]
    pub num_items: usize,
    #[arg(long = "K")]
    pub positions: usize,
    #[arg(long)]
    pub n: u64,
    /// Number of breakpoints.
    #[arg(long, default_value_t = 0)]
    pub upsilon: u64,
    /// Discount factor; defaults to the known-horizon schedule.
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Window length; defaults to the known-horizon schedule.
    #[arg(long)]
    pub tau: Option<u64>,
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    pub epsilon: f64,
    /// Attraction of the optimal items in the lower-bound instance.
    #[arg(long)]
    pub p: Option<f64>,
    /// Attraction gap; also the per-item gap used by the upper bounds.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Fail with exit code 1 when any bound is outside its valid range,
    /// instead of printing NaN for it.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long = "L", default_value_t = 10)]
    pub num_items: usize,
    #[arg(long = "K", default_value_t = 3)]
    pub positions: usize,
    #[arg(long, default_value_t = 10_000)]
    pub m1: u64,
    #[arg(long, default_value_t = 10_000)]
    pub m2: u64,
    #[arg(long, default_value_t = 5)]
    pub cycles: u64,
    /// Attraction given to boosted items.
    #[arg(long, default_value_t = 0.9)]
    pub boost: f64,
    /// Number of boosted items per perturbed epoch.
    #[arg(long, default_value_t = 3)]
    pub boosted: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated base vector; defaults to 0.90, 0.85, ...
    #[arg(long, value_delimiter = ',')]
    pub base: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = StartArg::Perturbed)]
    pub start: StartArg,
    /// Reuse one boosted subset for every perturbed epoch.
    #[arg(long)]
    pub fixed_subset: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, clap::ValueEnum)]
pub enum StartArg {
    Perturbed,
    Default,
}

/// Error tagged with the exit code it maps to.
struct Failure {
    code: i32,
    error: Error,
}

fn usage(error: Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error,
    }
}

fn runtime(error: Error) -> Failure {
    Failure {
        code: EXIT_RUNTIME,
        error,
    }
}

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let stdout = std::io::stdout();
    match execute(&cli.command, &mut stdout.lock()) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}

fn execute(command: &Command, stdout: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Run(a) => cmd_run(a),
        Command::Bounds(a) => cmd_bounds(a, stdout),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(format!("cannot create {}", path.display()), e))
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let config = ExperimentConfig::load(&args.config).map_err(usage)?;
    config
        .environment
        .queries(config.num_items)
        .map_err(usage)?;
    let result = run_experiment(&config, args.workers).map_err(runtime)?;
    let write = |path: &Path, f: &dyn Fn(&mut dyn Write) -> Result<()>| -> Result<()> {
        let mut out = create(path)?;
        f(&mut out)?;
        out.flush()
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    };
    write(&args.out, &|w| write_regret_csv(&config, &result, w)).map_err(runtime)?;
    if let Some(path) = &args.epochs {
        write(path, &|w| write_epoch_csv(&result, w)).map_err(runtime)?;
    }
    if let Some(path) = &args.traces {
        write(path, &|w| write_trace_csv(&result, w)).map_err(runtime)?;
    }
    Ok(())
}

/// Column labels: the bare policy name, or the full parameter string when
/// the same policy appears more than once.
fn policy_labels(result: &ExperimentResult) -> Vec<String> {
    let names: Vec<&str> = result
        .policies
        .iter()
        .map(|p| p.spec.display_name())
        .collect();
    result
        .policies
        .iter()
        .map(|p| {
            let name = p.spec.display_name();
            if names.iter().filter(|&&n| n == name).count() > 1 {
                p.spec.to_string()
            } else {
                name.to_string()
            }
        })
        .collect()
}

fn io_err(e: std::io::Error) -> Error {
    Error::io("writing output", e)
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidInput(format!("writing CSV: {e}"))
}

/// Writes the aggregated regret curves, preceded by a `#` comment holding the
/// resolved configuration.
pub fn write_regret_csv(
    config: &ExperimentConfig,
    result: &ExperimentResult,
    out: &mut dyn Write,
) -> Result<()> {
    let json = serde_json::to_string(&config.resolved())
        .map_err(|e| Error::InvalidInput(format!("serializing config: {e}")))?;
    writeln!(out, "# config: {json}").map_err(io_err)?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(REGRET_HEADER.split(',')).map_err(csv_err)?;
    for (label, p) in policy_labels(result).iter().zip(&result.policies) {
        let agg = &p.aggregate;
        for i in 0..agg.steps.len() {
            w.write_record([
                label.as_str(),
                &agg.steps[i].to_string(),
                &fmt_f64(agg.mean[i]),
                &fmt_f64(agg.stderr[i]),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Per-epoch regret: `policy,epoch,start_step,mean_regret,stderr`.
pub fn write_epoch_csv(result: &ExperimentResult, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "epoch", "start_step", "mean_regret", "stderr"])
        .map_err(csv_err)?;
    for (label, p) in policy_labels(result).iter().zip(&result.policies) {
        let Some(e) = &p.aggregate.epochs else {
            continue;
        };
        for i in 0..e.starts.len() {
            w.write_record([
                label.as_str(),
                &(i + 1).to_string(),
                &e.starts[i].to_string(),
                &fmt_f64(e.mean[i]),
                &fmt_f64(e.stderr[i]),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Raw traces: `policy,query,run,step,cum_regret`.
pub fn write_trace_csv(result: &ExperimentResult, out: &mut dyn Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["policy", "query", "run", "step", "cum_regret"])
        .map_err(csv_err)?;
    for (label, p) in policy_labels(result).iter().zip(&result.policies) {
        for cell in &p.traces {
            let query = &result.query_ids[cell.query];
            for (step, value) in cell.trace.steps.iter().zip(&cell.trace.cumulative) {
                w.write_record([
                    label.as_str(),
                    query,
                    &cell.run.to_string(),
                    &step.to_string(),
                    &fmt_f64(*value),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush().map_err(io_err)
}

fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write) -> Result<(), Failure> {
    if args.positions == 0 || args.positions > args.num_items || args.n == 0 {
        return Err(usage(Error::BoundPrecondition(format!(
            "1 ≤ K ≤ L and n ≥ 1 are required; got L = {}, K = {}, n = {}",
            args.num_items, args.positions, args.n
        ))));
    }
    let known = Some(args.upsilon);
    let gamma = args
        .gamma
        .unwrap_or_else(|| gamma_for_horizon(args.n, known));
    let tau = args.tau.unwrap_or_else(|| tau_for_horizon(args.n, known));
    let inputs = BoundInputs {
        num_items: args.num_items,
        horizon: args.n,
        breakpoints: args.upsilon,
        gamma,
        tau,
        epsilon: args.epsilon,
    };
    let missing = |what: &str| Error::BoundPrecondition(format!("--{what} is required"));
    let gaps = args
        .delta
        .map(|d| GapProfile::uniform(args.num_items, d))
        .ok_or_else(|| missing("delta"));
    let rows: Vec<(&str, Result<f64>)> = vec![
        (
            "ducb_upper_bound",
            gaps.as_ref()
                .map_err(|_| missing("delta"))
                .and_then(|g| ducb_upper_bound(&inputs, g)),
        ),
        (
            "swucb_upper_bound",
            gaps.as_ref()
                .map_err(|_| missing("delta"))
                .and_then(|g| swucb_upper_bound(&inputs, g)),
        ),
        (
            "regret_lower_bound",
            match (args.p, args.delta) {
                (Some(p), Some(d)) => {
                    regret_lower_bound(args.num_items, args.positions, d, p, args.n)
                }
                (None, _) => Err(missing("p")),
                (_, None) => Err(missing("delta")),
            },
        ),
        ("gamma", Ok(gamma)),
        ("tau", Ok(tau as f64)),
        (
            "gamma_unknown_breakpoints",
            Ok(gamma_for_horizon(args.n, None)),
        ),
        (
            "tau_unknown_breakpoints",
            Ok(tau_for_horizon(args.n, None) as f64),
        ),
    ];
    let mut text = String::from("bound_name,value\n");
    for (name, value) in rows {
        let shown = match value {
            Ok(v) => fmt_f64(v),
            Err(e) if args.strict => {
                return Err(usage(Error::BoundPrecondition(format!("{name}: {e}"))))
            }
            Err(e) => {
                eprintln!("warning: {name}: {e}");
                "NaN".into()
            }
        };
        text.push_str(&format!("{name},{shown}\n"));
    }
    out.write_all(text.as_bytes())
        .map_err(|e| runtime(io_err(e)))
}

fn cmd_synth(args: &SynthArgs) -> Result<(), Failure> {
    let base = match &args.base {
        Some(v) => AttractionVector::new(v.clone()).map_err(usage)?,
        None => linear_base_vector(args.num_items),
    };
    if base.len() != args.num_items {
        return Err(usage(Error::InvalidInput(format!(
            "--base has {} values but L = {}",
            base.len(),
            args.num_items
        ))));
    }
    let spec = PerturbationSpec {
        m1: args.m1,
        m2: args.m2,
        num_boosted: args.boosted,
        boost_value: args.boost,
        num_cycles: args.cycles,
        start_phase: match args.start {
            StartArg::Perturbed => StartPhase::Perturbed,
            StartArg::Default => StartPhase::Default,
        },
        fixed_subset: args.fixed_subset,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let schedule =
        build_synthetic_schedule(&base, args.positions, &spec, &mut rng).map_err(usage)?;
    let mut out = create(&args.out).map_err(runtime)?;
    write_schedule_csv(&schedule, &mut out).map_err(runtime)?;
    out.flush().map_err(|e| runtime(io_err(e)))
}
