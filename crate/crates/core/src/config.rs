//! Experiment configuration, as read from a JSON file.

use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::environment::{
    build_lower_bound_instance, build_synthetic_schedule, linear_base_vector, load_query_models,
    AttractionSchedule, PerturbationSpec, QueryModel,
};
use crate::error::{Error, Result};
use crate::model::AttractionVector;
use crate::policies::PolicySpec;

pub const DEFAULT_TRACE_STRIDE: u64 = 100;
pub const DEFAULT_RUNS_PER_QUERY: u64 = 10;

/// Where the base attraction vectors come from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum BaseSource {
    /// One query with `0.90, 0.85, ...`.
    Linear,
    /// One query per inline vector, named `q1, q2, ...`.
    Vectors(Vec<AttractionVector>),
    /// Query models from a CSV file; relative paths resolve against the config file.
    QueryFile(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EnvironmentSpec {
    /// Alternating perturbed and default epochs around each base vector.
    Synthetic {
        base: BaseSource,
        #[serde(default)]
        perturbation: PerturbationSpec,
    },
    /// Each base vector held fixed for the whole horizon.
    Stationary { base: BaseSource },
    /// Two attraction levels that swap at the given steps.
    LowerBound {
        p: f64,
        delta: f64,
        #[serde(default)]
        flip_steps: Vec<u64>,
    },
}

impl EnvironmentSpec {
    pub fn queries(&self, num_items: usize) -> Result<Vec<QueryModel>> {
        let queries = match self {
            EnvironmentSpec::Synthetic { base, .. } | EnvironmentSpec::Stationary { base } => {
                match base {
                    BaseSource::Linear => vec![QueryModel {
                        id: "linear".into(),
                        alpha: linear_base_vector(num_items),
                    }],
                    BaseSource::Vectors(vs) => vs
                        .iter()
                        .enumerate()
                        .map(|(i, v)| QueryModel {
                            id: format!("q{}", i + 1),
                            alpha: v.clone(),
                        })
                        .collect(),
                    BaseSource::QueryFile(path) => load_query_models(path)?.queries().to_vec(),
                }
            }
            EnvironmentSpec::LowerBound { .. } => vec![QueryModel {
                id: "lower_bound".into(),
                alpha: AttractionVector::new(vec![0.0; num_items])?,
            }],
        };
        if queries.is_empty() {
            return Err(Error::Config("the environment defines no queries".into()));
        }
        for q in &queries {
            if q.alpha.len() != num_items {
                return Err(Error::Config(format!(
                    "query {} has {} attraction values but L = {num_items}",
                    q.id,
                    q.alpha.len()
                )));
            }
        }
        Ok(queries)
    }

    /// Schedule for one `(query, run)` cell, cut to `horizon` steps.
    pub fn schedule<R: Rng + ?Sized>(
        &self,
        base: &AttractionVector,
        k: usize,
        horizon: u64,
        rng: &mut R,
    ) -> Result<AttractionSchedule> {
        match self {
            EnvironmentSpec::Synthetic { perturbation, .. } => {
                if perturbation.horizon() < horizon {
                    return Err(Error::Config(format!(
                        "the perturbation schedule lasts {} steps but n = {horizon}",
                        perturbation.horizon()
                    )));
                }
                build_synthetic_schedule(base, k, perturbation, rng)?.truncated(horizon)
            }
            EnvironmentSpec::Stationary { .. } => {
                AttractionSchedule::constant(base.clone(), horizon)
            }
            EnvironmentSpec::LowerBound {
                p,
                delta,
                flip_steps,
            } => build_lower_bound_instance(base.len(), *p, *delta, flip_steps, horizon),
        }
    }

    fn resolve_paths(&mut self, dir: &Path) {
        if let EnvironmentSpec::Synthetic {
            base: BaseSource::QueryFile(p),
            ..
        }
        | EnvironmentSpec::Stationary {
            base: BaseSource::QueryFile(p),
        } = self
        {
            if p.is_relative() {
                *p = dir.join(&*p);
            }
        }
    }
}

fn default_stride() -> u64 {
    DEFAULT_TRACE_STRIDE
}

fn default_runs() -> u64 {
    DEFAULT_RUNS_PER_QUERY
}

fn default_policies() -> Vec<PolicySpec> {
    PolicySpec::all()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(rename = "L")]
    pub num_items: usize,
    #[serde(rename = "K")]
    pub positions: usize,
    #[serde(rename = "n")]
    pub horizon: u64,
    #[serde(default = "default_policies")]
    pub policies: Vec<PolicySpec>,
    pub environment: EnvironmentSpec,
    #[serde(default = "default_runs")]
    pub runs_per_query: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default = "default_stride")]
    pub trace_stride: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if self.num_items == 0 {
            return fail("L must be at least 1".into());
        }
        if self.positions == 0 || self.positions > self.num_items {
            return fail(format!(
                "K ≤ L is required; got K = {} and L = {}",
                self.positions, self.num_items
            ));
        }
        if self.horizon == 0 {
            return fail("n must be at least 1".into());
        }
        if self.runs_per_query == 0 {
            return fail("runs_per_query must be at least 1".into());
        }
        if self.trace_stride == 0 {
            return fail("trace_stride must be at least 1".into());
        }
        if self.policies.is_empty() {
            return fail("at least one policy is required".into());
        }
        if let EnvironmentSpec::Synthetic { perturbation, .. } = &self.environment {
            perturbation
                .validate(self.num_items, self.positions)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        Ok(())
    }

    /// Copy with every policy default filled in.
    pub fn resolved(&self) -> ExperimentConfig {
        let mut c = self.clone();
        c.policies = self
            .policies
            .iter()
            .map(|p| p.resolve(self.num_items, self.horizon))
            .collect();
        c
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("cannot read config {}", path.display()), e))?;
        let mut config = Self::from_json(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        config
            .environment
            .resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(config)
    }
}
