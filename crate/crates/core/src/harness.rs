//! Runs policies against schedules and aggregates their regret.
//!
//! Regret is accounted in expectation: each step is charged the expected
//! reward gap between the best list under the current attraction vector and
//! the list the policy showed. Clicks are still sampled, because they drive
//! learning.
//!
//! Every random stream is derived from `(master_seed, query, run, stream)`
//! with [`derive_seed`], and results are joined in `(query, run)` order, so
//! the output does not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::environment::{sample_click, AttractionSchedule};
use crate::error::{Error, Result};
use crate::model::{expected_reward_unchecked, optimal_list, regret_against};
use crate::policies::{PolicySpec, RankingPolicy};

/// Stream tags passed to [`derive_seed`].
pub mod streams {
    pub const ENVIRONMENT: u64 = 0;
    pub const FEEDBACK: u64 = 1;
    pub const POLICY: u64 = 2;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit seed for one random stream of one `(query, run)` cell.
///
/// Each component is folded in with a SplitMix64 step:
/// `h = splitmix64(h ^ component)`, starting from `splitmix64(master_seed)`.
pub fn derive_seed(master_seed: u64, query: u64, run: u64, stream: u64) -> u64 {
    [query, run, stream]
        .into_iter()
        .fold(splitmix64(master_seed), |h, c| splitmix64(h ^ c))
}

/// Cumulative expected regret of one run.
#[derive(Clone, Debug, PartialEq)]
pub struct RunTrace {
    /// Steps at which the cumulative regret was sampled; always ends at the horizon.
    pub steps: Vec<u64>,
    pub cumulative: Vec<f64>,
    pub final_regret: f64,
    /// First step of every epoch of the schedule within the horizon.
    pub epoch_starts: Vec<u64>,
    /// Regret accumulated inside each epoch; folding these left to right gives
    /// `final_regret` exactly.
    pub epoch_regret: Vec<f64>,
}

impl RunTrace {
    pub fn horizon(&self) -> u64 {
        *self.steps.last().expect("traces cover at least one step")
    }
}

/// Sample points `stride, 2*stride, ...` plus the horizon itself.
pub fn sample_steps(horizon: u64, stride: u64) -> Vec<u64> {
    let mut steps: Vec<u64> = (1..=horizon / stride).map(|i| i * stride).collect();
    if steps.last() != Some(&horizon) {
        steps.push(horizon);
    }
    steps
}

/// Plays `policy` for `horizon` steps against `schedule`.
///
/// `feedback_seed` seeds the click stream. Fails if the policy shows a list
/// of the wrong length or with unknown items.
pub fn run_single(
    schedule: &AttractionSchedule,
    policy: &mut dyn RankingPolicy,
    k: usize,
    horizon: u64,
    feedback_seed: u64,
    stride: u64,
) -> Result<RunTrace> {
    if horizon == 0 || stride == 0 {
        return Err(Error::invalid(
            "horizon and trace stride must be at least 1",
        ));
    }
    if schedule.horizon() < horizon {
        return Err(Error::invalid(format!(
            "schedule covers {} steps but the run needs {horizon}",
            schedule.horizon()
        )));
    }
    let num_items = schedule.num_items();
    let segments: Vec<_> = schedule
        .segments()
        .iter()
        .filter(|s| s.start <= horizon)
        .collect();
    let best_rewards = segments
        .iter()
        .map(|s| {
            Ok(expected_reward_unchecked(
                &optimal_list(&s.alpha, k)?,
                &s.alpha,
            ))
        })
        .collect::<Result<Vec<f64>>>()?;

    let mut rng = ChaCha8Rng::seed_from_u64(feedback_seed);
    let sample_at = sample_steps(horizon, stride);
    let mut steps = Vec::with_capacity(sample_at.len());
    let mut cumulative = Vec::with_capacity(sample_at.len());
    let mut next_sample = sample_at.iter().copied().peekable();

    let mut epoch_regret = Vec::with_capacity(segments.len());
    let mut done_before_epoch = 0.0;
    let mut in_epoch = 0.0;
    let mut seg = 0;

    for t in 1..=horizon {
        if seg + 1 < segments.len() && segments[seg + 1].start == t {
            epoch_regret.push(in_epoch);
            done_before_epoch += in_epoch;
            in_epoch = 0.0;
            seg += 1;
        }
        let alpha = &segments[seg].alpha;
        let list = policy.select(t);
        if list.len() != k || list.max_item().index() >= num_items {
            return Err(Error::InvalidList {
                policy: policy.name().to_string(),
                step: t,
                reason: format!(
                    "expected {k} items from 1..={num_items}, got {:?}",
                    list.items().iter().map(|a| a.get()).collect::<Vec<_>>()
                ),
            });
        }
        in_epoch += regret_against(best_rewards[seg], expected_reward_unchecked(&list, alpha));
        let click = sample_click(&list, alpha, &mut rng);
        policy.update(t, &list, click)?;

        if next_sample.peek() == Some(&t) {
            next_sample.next();
            steps.push(t);
            cumulative.push(done_before_epoch + in_epoch);
        }
    }
    epoch_regret.push(in_epoch);
    let final_regret = done_before_epoch + in_epoch;
    Ok(RunTrace {
        steps,
        cumulative,
        final_regret,
        epoch_starts: segments.iter().map(|s| s.start).collect(),
        epoch_regret,
    })
}

/// Regret inside each epoch of `schedule` for a trace produced on it.
pub fn per_epoch_regret(trace: &RunTrace, schedule: &AttractionSchedule) -> Result<Vec<f64>> {
    let horizon = trace.horizon();
    if schedule.horizon() < horizon {
        return Err(Error::invalid(format!(
            "trace covers {horizon} steps but the schedule only {}",
            schedule.horizon()
        )));
    }
    let starts: Vec<u64> = schedule
        .segments()
        .iter()
        .map(|s| s.start)
        .filter(|&s| s <= horizon)
        .collect();
    if starts != trace.epoch_starts {
        return Err(Error::invalid(
            "trace was not produced on this schedule (epoch boundaries differ)",
        ));
    }
    Ok(trace.epoch_regret.clone())
}

/// Sample mean and standard error (sample standard deviation over `sqrt(count)`),
/// summed in the given order.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Mean and standard error of a set of traces at every sample point.
#[derive(Clone, Debug, PartialEq)]
pub struct AggregateResult {
    pub num_traces: usize,
    pub steps: Vec<u64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
    pub final_mean: f64,
    pub final_stderr: f64,
    /// Per-epoch statistics, present when all traces share epoch boundaries.
    pub epochs: Option<EpochStats>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochStats {
    pub starts: Vec<u64>,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

pub fn aggregate(traces: &[RunTrace]) -> Result<AggregateResult> {
    let first = traces
        .first()
        .ok_or_else(|| Error::invalid("nothing to aggregate"))?;
    if traces.iter().any(|t| t.steps != first.steps) {
        return Err(Error::invalid("traces were sampled at different steps"));
    }
    let column = |f: &dyn Fn(&RunTrace) -> f64| -> (f64, f64) {
        let values: Vec<f64> = traces.iter().map(f).collect();
        mean_and_stderr(&values)
    };
    let (mean, stderr) = (0..first.steps.len())
        .map(|i| column(&|t| t.cumulative[i]))
        .unzip();
    let (final_mean, final_stderr) = column(&|t| t.final_regret);
    let epochs = traces
        .iter()
        .all(|t| t.epoch_starts == first.epoch_starts)
        .then(|| {
            let (mean, stderr) = (0..first.epoch_starts.len())
                .map(|e| column(&|t| t.epoch_regret[e]))
                .unzip();
            EpochStats {
                starts: first.epoch_starts.clone(),
                mean,
                stderr,
            }
        });
    Ok(AggregateResult {
        num_traces: traces.len(),
        steps: first.steps.clone(),
        mean,
        stderr,
        final_mean,
        final_stderr,
        epochs,
    })
}

/// Raw trace of one `(query, run)` cell for one policy.
#[derive(Clone, Debug)]
pub struct CellTrace {
    pub query: usize,
    pub run: u64,
    pub trace: RunTrace,
}

#[derive(Clone, Debug)]
pub struct PolicyResult {
    /// Policy with every default filled in.
    pub spec: PolicySpec,
    pub aggregate: AggregateResult,
    /// One aggregate per query, in query order.
    pub per_query: Vec<AggregateResult>,
    pub traces: Vec<CellTrace>,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub query_ids: Vec<String>,
    pub policies: Vec<PolicyResult>,
}

/// Runs every configured policy on every `(query, run)` cell.
///
/// Within a cell all policies face the same schedule (including the random
/// perturbation subsets) and start their click streams from the same seed.
/// `workers = 0` uses the default thread count.
pub fn run_experiment(config: &ExperimentConfig, workers: usize) -> Result<ExperimentResult> {
    config.validate()?;
    let queries = config.environment.queries(config.num_items)?;
    let specs: Vec<PolicySpec> = config
        .policies
        .iter()
        .map(|p| p.resolve(config.num_items, config.horizon))
        .collect();
    let cells: Vec<(usize, u64)> = (0..queries.len())
        .flat_map(|q| (0..config.runs_per_query).map(move |r| (q, r)))
        .collect();

    let run_cell = |&(q, r): &(usize, u64)| -> Result<Vec<RunTrace>> {
        let seed = |stream| derive_seed(config.master_seed, q as u64, r, stream);
        let mut env_rng = ChaCha8Rng::seed_from_u64(seed(streams::ENVIRONMENT));
        let schedule = config
            .environment
            .schedule(
                &queries[q].alpha,
                config.positions,
                config.horizon,
                &mut env_rng,
            )
            .map_err(|e| Error::Config(format!("query {}: {e}", queries[q].id)))?;
        specs
            .iter()
            .map(|spec| {
                let mut policy = spec.build(
                    config.num_items,
                    config.positions,
                    config.horizon,
                    seed(streams::POLICY),
                )?;
                run_single(
                    &schedule,
                    policy.as_mut(),
                    config.positions,
                    config.horizon,
                    seed(streams::FEEDBACK),
                    config.trace_stride,
                )
                .map_err(|e| Error::invalid(format!("query {} run {r}: {e}", queries[q].id)))
            })
            .collect()
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::invalid(format!("cannot start worker pool: {e}")))?;
    let by_cell: Vec<Vec<RunTrace>> =
        pool.install(|| cells.par_iter().map(run_cell).collect::<Result<_>>())?;

    let mut policies = Vec::with_capacity(specs.len());
    for (p, spec) in specs.into_iter().enumerate() {
        let traces: Vec<CellTrace> = cells
            .iter()
            .zip(&by_cell)
            .map(|(&(query, run), cell)| CellTrace {
                query,
                run,
                trace: cell[p].clone(),
            })
            .collect();
        let all: Vec<RunTrace> = traces.iter().map(|c| c.trace.clone()).collect();
        let per_query = (0..queries.len())
            .map(|q| {
                let mine: Vec<RunTrace> = traces
                    .iter()
                    .filter(|c| c.query == q)
                    .map(|c| c.trace.clone())
                    .collect();
                aggregate(&mine)
            })
            .collect::<Result<_>>()?;
        policies.push(PolicyResult {
            spec,
            aggregate: aggregate(&all)?,
            per_query,
            traces,
        });
    }
    Ok(ExperimentResult {
        query_ids: queries.iter().map(|q| q.id.clone()).collect(),
        policies,
    })
}
