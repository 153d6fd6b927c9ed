//! Piecewise-stationary cascade environments.
//!
//! An [`AttractionSchedule`] maps each step `1..=n` to the attraction vector in
//! force at that step. Segments start at 1-based inclusive steps and last until
//! the next segment starts.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::fmt_f64;
use crate::model::{optimal_list, AttractionVector, ClickOutcome, ItemId, RankedList};

#[derive(Clone, Debug, PartialEq)]
pub struct Segment {
    pub start: u64,
    pub alpha: AttractionVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttractionSchedule {
    segments: Vec<Segment>,
    horizon: u64,
}

impl AttractionSchedule {
    pub fn new(segments: Vec<Segment>, horizon: u64) -> Result<Self> {
        let first = segments
            .first()
            .ok_or_else(|| Error::invalid("schedule needs at least one segment"))?;
        if first.start != 1 {
            return Err(Error::invalid(format!(
                "first segment must start at step 1, not {}",
                first.start
            )));
        }
        let l = first.alpha.len();
        for pair in segments.windows(2) {
            if pair[1].start <= pair[0].start {
                return Err(Error::invalid(format!(
                    "segment starts must be strictly increasing ({} then {})",
                    pair[0].start, pair[1].start
                )));
            }
        }
        if let Some(seg) = segments.iter().find(|s| s.alpha.len() != l) {
            return Err(Error::invalid(format!(
                "segment starting at step {} has {} items, expected {l}",
                seg.start,
                seg.alpha.len()
            )));
        }
        let last = segments.last().map_or(1, |s| s.start);
        if horizon < last {
            return Err(Error::invalid(format!(
                "horizon {horizon} ends before the last segment start {last}"
            )));
        }
        Ok(AttractionSchedule { segments, horizon })
    }

    pub fn constant(alpha: AttractionVector, horizon: u64) -> Result<Self> {
        AttractionSchedule::new(vec![Segment { start: 1, alpha }], horizon)
    }

    /// Builds a schedule from consecutive epochs `(length, alpha)`, merging
    /// neighbours whose vectors are identical so every boundary is a real change.
    pub fn from_epochs(epochs: Vec<(u64, AttractionVector)>) -> Result<Self> {
        let mut segments: Vec<Segment> = Vec::new();
        let mut next_start = 1u64;
        for (len, alpha) in epochs {
            if len == 0 {
                return Err(Error::invalid("epochs must last at least one step"));
            }
            if segments.last().is_none_or(|s| s.alpha != alpha) {
                segments.push(Segment {
                    start: next_start,
                    alpha,
                });
            }
            next_start += len;
        }
        AttractionSchedule::new(segments, next_start - 1)
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn num_items(&self) -> usize {
        self.segments[0].alpha.len()
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    /// Index of the segment containing step `t`.
    pub fn segment_index(&self, t: u64) -> Result<usize> {
        if t == 0 || t > self.horizon {
            return Err(Error::OutOfHorizon {
                step: t,
                horizon: self.horizon,
            });
        }
        Ok(self.segments.partition_point(|s| s.start <= t) - 1)
    }

    pub fn alpha_at(&self, t: u64) -> Result<&AttractionVector> {
        Ok(&self.segments[self.segment_index(t)?].alpha)
    }

    /// Inclusive `(first, last)` steps of every segment.
    pub fn epoch_bounds(&self) -> Vec<(u64, u64)> {
        self.segments
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let end = self
                    .segments
                    .get(i + 1)
                    .map_or(self.horizon, |next| next.start - 1);
                (s.start, end)
            })
            .collect()
    }

    /// Number of changes after step 1 (segments minus one).
    pub fn breakpoint_count(&self) -> usize {
        self.segments.len() - 1
    }

    /// Breakpoint count when the environment is taken to sit at `reference`
    /// before step 1: an initial segment that differs from it counts as a change.
    pub fn breakpoint_count_from(&self, reference: &AttractionVector) -> usize {
        self.breakpoint_count() + usize::from(self.segments[0].alpha != *reference)
    }

    /// The same schedule cut to its first `n` steps.
    pub fn truncated(&self, n: u64) -> Result<Self> {
        if n == 0 || n > self.horizon {
            return Err(Error::OutOfHorizon {
                step: n,
                horizon: self.horizon,
            });
        }
        let segments = self
            .segments
            .iter()
            .filter(|s| s.start <= n)
            .cloned()
            .collect();
        AttractionSchedule::new(segments, n)
    }
}

pub fn alpha_at(schedule: &AttractionSchedule, t: u64) -> Result<&AttractionVector> {
    schedule.alpha_at(t)
}

pub fn breakpoint_count(schedule: &AttractionSchedule) -> usize {
    schedule.breakpoint_count()
}

/// Draws one attraction indicator per shown item and returns the first click.
pub fn sample_click<R: Rng + ?Sized>(
    list: &RankedList,
    alpha: &AttractionVector,
    rng: &mut R,
) -> ClickOutcome {
    let k = list.len();
    let mut first = k + 1;
    for (i, &item) in list.items().iter().enumerate() {
        let attracted = rng.random::<f64>() < alpha.get(item);
        if attracted && first > k {
            first = i + 1;
        }
    }
    ClickOutcome::new(first, k).expect("position within 1..=K+1")
}

pub fn sample_feedback<R: Rng + ?Sized>(
    schedule: &AttractionSchedule,
    list: &RankedList,
    t: u64,
    rng: &mut R,
) -> Result<ClickOutcome> {
    let alpha = schedule.alpha_at(t)?;
    if list.max_item().index() >= alpha.len() {
        return Err(Error::invalid(format!(
            "list shows item {} but the environment has {} items",
            list.max_item(),
            alpha.len()
        )));
    }
    Ok(sample_click(list, alpha, rng))
}

/// Which kind of epoch a synthetic schedule opens with.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartPhase {
    Perturbed,
    Default,
}

/// Alternating perturbed/default epochs: during a perturbed epoch a random set
/// of items outside the base top-K is raised to `boost_value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PerturbationSpec {
    pub m1: u64,
    pub m2: u64,
    pub num_boosted: usize,
    pub boost_value: f64,
    pub num_cycles: u64,
    pub start_phase: StartPhase,
    /// Draw the boosted subset once and reuse it in every perturbed epoch.
    pub fixed_subset: bool,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        PerturbationSpec {
            m1: 10_000,
            m2: 10_000,
            num_boosted: 3,
            boost_value: 0.9,
            num_cycles: 5,
            start_phase: StartPhase::Perturbed,
            fixed_subset: false,
        }
    }
}

impl PerturbationSpec {
    pub fn horizon(&self) -> u64 {
        self.num_cycles * (self.m1 + self.m2)
    }

    pub fn validate(&self, num_items: usize, k: usize) -> Result<()> {
        if self.m1 == 0 || self.m2 == 0 {
            return Err(Error::invalid("epoch lengths m1 and m2 must be at least 1"));
        }
        if self.num_cycles == 0 {
            return Err(Error::invalid("num_cycles must be at least 1"));
        }
        if k == 0 || k > num_items {
            return Err(Error::invalid(format!(
                "list length K={k} must be in 1..=L={num_items}"
            )));
        }
        if self.num_boosted > num_items - k {
            return Err(Error::invalid(format!(
                "cannot boost {} items: only L-K={} items lie outside the top {k}",
                self.num_boosted,
                num_items - k
            )));
        }
        if !(0.0..=1.0).contains(&self.boost_value) {
            return Err(Error::invalid(format!(
                "boost value {} is outside [0, 1]",
                self.boost_value
            )));
        }
        Ok(())
    }
}

/// Default base vector for synthetic experiments: `0.90, 0.85, 0.80, ...`
/// (floored at zero).
pub fn linear_base_vector(num_items: usize) -> AttractionVector {
    let probs = (0..num_items)
        .map(|i| (0.90 - 0.05 * i as f64).max(0.0))
        .collect();
    AttractionVector::new(probs).expect("values lie in [0, 1]")
}

pub fn build_synthetic_schedule<R: Rng + ?Sized>(
    base: &AttractionVector,
    k: usize,
    spec: &PerturbationSpec,
    rng: &mut R,
) -> Result<AttractionSchedule> {
    let l = base.len();
    spec.validate(l, k)?;
    let top = optimal_list(base, k)?;
    let candidates: Vec<ItemId> = (0..l)
        .map(ItemId::from_index)
        .filter(|a| top.position_of(*a).is_none())
        .collect();

    let draw_perturbed = |rng: &mut R| {
        let mut probs = base.as_slice().to_vec();
        for i in index::sample(rng, candidates.len(), spec.num_boosted) {
            probs[candidates[i].index()] = spec.boost_value;
        }
        AttractionVector::new(probs).expect("boost value validated")
    };

    let fixed = spec.fixed_subset.then(|| draw_perturbed(rng));
    let mut epochs = Vec::with_capacity(2 * spec.num_cycles as usize);
    for _ in 0..spec.num_cycles {
        let perturbed = match &fixed {
            Some(v) => v.clone(),
            None => draw_perturbed(rng),
        };
        match spec.start_phase {
            StartPhase::Perturbed => {
                epochs.push((spec.m1, perturbed));
                epochs.push((spec.m2, base.clone()));
            }
            StartPhase::Default => {
                epochs.push((spec.m2, base.clone()));
                epochs.push((spec.m1, perturbed));
            }
        }
    }
    AttractionSchedule::from_epochs(epochs)
}

/// Two-level instance where exactly `L/2` items have attraction `p` and the
/// rest `p - delta`; the two groups swap roles at every flip step.
pub fn build_lower_bound_instance(
    num_items: usize,
    p: f64,
    delta: f64,
    flip_steps: &[u64],
    horizon: u64,
) -> Result<AttractionSchedule> {
    if num_items == 0 || !num_items.is_multiple_of(2) {
        return Err(Error::invalid(format!(
            "the lower-bound instance needs an even, positive L; got {num_items}"
        )));
    }
    if !(delta > 0.0 && delta <= p && p <= 1.0) {
        return Err(Error::invalid(format!(
            "need 0 < delta <= p <= 1; got p={p}, delta={delta}"
        )));
    }
    let mut last = 1;
    for &s in flip_steps {
        if s <= last || s > horizon {
            return Err(Error::invalid(format!(
                "flip steps must be strictly increasing within 2..={horizon}; got {s}"
            )));
        }
        last = s;
    }
    let half = num_items / 2;
    let level = |first_half_optimal: bool| {
        let probs = (0..num_items)
            .map(|i| {
                if (i < half) == first_half_optimal {
                    p
                } else {
                    p - delta
                }
            })
            .collect();
        AttractionVector::new(probs)
    };
    let mut segments = vec![Segment {
        start: 1,
        alpha: level(true)?,
    }];
    for (i, &s) in flip_steps.iter().enumerate() {
        segments.push(Segment {
            start: s,
            alpha: level(i % 2 == 1)?,
        });
    }
    AttractionSchedule::new(segments, horizon)
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryModel {
    pub id: String,
    pub alpha: AttractionVector,
}

/// Per-query base attraction vectors, all of the same length.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryModelSet {
    queries: Vec<QueryModel>,
}

impl QueryModelSet {
    pub fn new(queries: Vec<QueryModel>) -> Result<Self> {
        let first = queries
            .first()
            .ok_or_else(|| Error::invalid("no queries"))?;
        let l = first.alpha.len();
        if let Some(q) = queries.iter().find(|q| q.alpha.len() != l) {
            return Err(Error::invalid(format!(
                "query {} has {} items, expected {l}",
                q.id,
                q.alpha.len()
            )));
        }
        Ok(QueryModelSet { queries })
    }

    pub fn queries(&self) -> &[QueryModel] {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn num_items(&self) -> usize {
        self.queries[0].alpha.len()
    }
}

/// Reads a query model CSV (`query_id,a1,...,aL`, one query per row).
pub fn load_query_models(path: &Path) -> Result<QueryModelSet> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    parse_query_models(file, path)
}

pub fn parse_query_models<R: Read>(input: R, path: &Path) -> Result<QueryModelSet> {
    let err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input);

    let mut records = reader.records();
    let header = match records.next() {
        None => return Err(err(1, "no queries".into())),
        Some(r) => r.map_err(|e| err(csv_line(&e), e.to_string()))?,
    };
    let header_line = header.position().map_or(1, |p| p.line());
    let num_items = header.len().saturating_sub(1);
    let expected_header = header_names("query_id", num_items);
    if num_items == 0 || header.iter().ne(expected_header.iter().map(String::as_str)) {
        return Err(err(
            header_line,
            format!(
                "expected header `query_id,a1,...,aL`, got `{}`",
                header.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }

    let mut queries = Vec::new();
    for record in records {
        let record = record.map_err(|e| err(csv_line(&e), e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != num_items + 1 {
            return Err(err(
                line,
                format!(
                    "expected {} columns (query_id plus {num_items} probabilities), found {}",
                    num_items + 1,
                    record.len()
                ),
            ));
        }
        let id = record[0].to_string();
        if id.is_empty() {
            return Err(err(line, "empty query_id".into()));
        }
        let mut probs = Vec::with_capacity(num_items);
        for (col, field) in record.iter().enumerate().skip(1) {
            let p: f64 = field.parse().map_err(|_| {
                err(
                    line,
                    format!("query {id}, column a{col}: `{field}` is not a number"),
                )
            })?;
            if !(0.0..=1.0).contains(&p) {
                return Err(err(
                    line,
                    format!("query {id}, column a{col}: probability {p} is outside [0, 1]"),
                ));
            }
            probs.push(p);
        }
        queries.push(QueryModel {
            id,
            alpha: AttractionVector::new(probs)?,
        });
    }
    if queries.is_empty() {
        return Err(err(header_line, "no queries".into()));
    }
    QueryModelSet::new(queries)
}

fn csv_line(e: &csv::Error) -> u64 {
    e.position().map_or(0, |p| p.line())
}

fn header_names(first: &str, num_items: usize) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain((1..=num_items).map(|i| format!("a{i}")))
        .collect()
}

const HORIZON_PREFIX: &str = "# horizon=";

/// Writes `# horizon=n` followed by `start_step,a1,...,aL` rows.
pub fn write_schedule_csv<W: Write>(schedule: &AttractionSchedule, mut out: W) -> Result<()> {
    let io = |e| Error::io("writing schedule", e);
    writeln!(out, "{HORIZON_PREFIX}{}", schedule.horizon()).map_err(io)?;
    writeln!(
        out,
        "{}",
        header_names("start_step", schedule.num_items()).join(",")
    )
    .map_err(io)?;
    for seg in schedule.segments() {
        let row: Vec<String> = std::iter::once(seg.start.to_string())
            .chain(seg.alpha.as_slice().iter().map(|&p| fmt_f64(p)))
            .collect();
        writeln!(out, "{}", row.join(",")).map_err(io)?;
    }
    Ok(())
}

pub fn load_schedule_csv(path: &Path) -> Result<AttractionSchedule> {
    let file = File::open(path).map_err(|e| Error::io(format!("opening {}", path.display()), e))?;
    parse_schedule_csv(BufReader::new(file), path)
}

pub fn parse_schedule_csv<R: BufRead>(mut input: R, path: &Path) -> Result<AttractionSchedule> {
    let err = |line: u64, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut first = String::new();
    input
        .read_line(&mut first)
        .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    let horizon: u64 = first
        .trim()
        .strip_prefix(HORIZON_PREFIX)
        .and_then(|h| h.trim().parse().ok())
        .ok_or_else(|| {
            err(
                1,
                format!("expected `{HORIZON_PREFIX}<steps>` on the first line"),
            )
        })?;

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = reader.headers().map_err(|e| err(2, e.to_string()))?.clone();
    let num_items = header.len().saturating_sub(1);
    let expected = header_names("start_step", num_items);
    if num_items == 0 || header.iter().ne(expected.iter().map(String::as_str)) {
        return Err(err(2, "expected header `start_step,a1,...,aL`".into()));
    }
    let mut segments = Vec::new();
    for record in reader.records() {
        // Line numbers from the csv reader start after the horizon line.
        let record = record.map_err(|e| err(csv_line(&e) + 1, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line()) + 1;
        let start: u64 = record[0]
            .parse()
            .map_err(|_| err(line, format!("bad start_step `{}`", &record[0])))?;
        let probs = record
            .iter()
            .skip(1)
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| err(line, format!("bad probability `{f}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        let alpha = AttractionVector::new(probs).map_err(|e| err(line, e.to_string()))?;
        segments.push(Segment { start, alpha });
    }
    AttractionSchedule::new(segments, horizon).map_err(|e| err(0, e.to_string()))
}
