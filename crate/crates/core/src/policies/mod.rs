//! Ranking policies for cascading bandits.
//!
//! Every policy follows the same loop: [`RankingPolicy::select`] a list for
//! step `t`, then [`RankingPolicy::update`] with the click on that list. The
//! UCB-family policies rank items by an index and show the top `K`; unseen
//! items get an infinite index so each is explored before any estimate is
//! trusted.

mod ducb;
mod exp3;
mod klucb;
mod swucb;
mod ucb1;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bounds::{gamma_for_horizon, tau_for_horizon};
use crate::error::{Error, Result};
use crate::model::{rank_by_score, ClickOutcome, RankedList};

pub use ducb::{ducb_index, CascadeDucb};
pub use exp3::{default_exploration, RankedExp3};
pub use klucb::{kl_ucb_root, klucb_index, CascadeKlUcb, KL_UCB_MAX_ITER, KL_UCB_TOLERANCE};
pub use swucb::{swucb_index, CascadeSwucb};
pub use ucb1::{ucb1_index, CascadeUcb1, UCB1_RADIUS_SCALE};

/// Default confidence scale for the non-stationary UCB policies.
pub const DEFAULT_EPSILON: f64 = 0.5;

pub trait RankingPolicy: Send {
    fn name(&self) -> &str;

    /// The list to show at step `t` (1-based).
    fn select(&mut self, t: u64) -> RankedList;

    /// Feeds back the click observed on `list` at step `t`.
    fn update(&mut self, t: u64, list: &RankedList, click: ClickOutcome) -> Result<()>;
}

/// Top `k` items by index, highest first, ties to the smaller id.
///
/// Because the cascade reward is monotone in each attraction and ignores
/// order, this list maximises the reward computed from the indices.
pub fn select_list(ucbs: &[f64], k: usize) -> Result<RankedList> {
    if k == 0 || k > ucbs.len() {
        return Err(Error::invalid(format!(
            "list length K={k} must be in 1..=L={}",
            ucbs.len()
        )));
    }
    RankedList::new(rank_by_score(ucbs, k), ucbs.len())
}

pub(crate) fn check_feedback(
    list: &RankedList,
    click: ClickOutcome,
    num_items: usize,
) -> Result<()> {
    if click.slots() != list.len() {
        return Err(Error::invalid(format!(
            "click refers to a list of {} items but {} were shown",
            click.slots(),
            list.len()
        )));
    }
    if list.max_item().index() >= num_items {
        return Err(Error::invalid(format!(
            "list shows item {} but the policy knows {num_items} items",
            list.max_item()
        )));
    }
    Ok(())
}

pub(crate) fn check_dims(num_items: usize, k: usize) -> Result<()> {
    if k == 0 || k > num_items {
        return Err(Error::invalid(format!(
            "list length K={k} must be in 1..=L={num_items}"
        )));
    }
    Ok(())
}

/// Policy choice as it appears in experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum PolicySpec {
    CascadeDucb {
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    CascadeSwucb {
        #[serde(default)]
        tau: Option<u64>,
        #[serde(default = "default_epsilon")]
        epsilon: f64,
    },
    CascadeUcb1 {},
    CascadeKlUcb {},
    RankedExp3 {
        #[serde(default)]
        exploration: Option<f64>,
    },
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

impl PolicySpec {
    pub fn ducb() -> Self {
        PolicySpec::CascadeDucb {
            gamma: None,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn swucb() -> Self {
        PolicySpec::CascadeSwucb {
            tau: None,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn exp3() -> Self {
        PolicySpec::RankedExp3 { exploration: None }
    }

    /// The five policies compared in the synthetic experiment.
    pub fn all() -> Vec<Self> {
        vec![
            PolicySpec::ducb(),
            PolicySpec::swucb(),
            PolicySpec::CascadeUcb1 {},
            PolicySpec::CascadeKlUcb {},
            PolicySpec::exp3(),
        ]
    }

    pub fn display_name(&self) -> &'static str {
        match self {
            PolicySpec::CascadeDucb { .. } => "CascadeDUCB",
            PolicySpec::CascadeSwucb { .. } => "CascadeSWUCB",
            PolicySpec::CascadeUcb1 {} => "CascadeUCB1",
            PolicySpec::CascadeKlUcb {} => "CascadeKL-UCB",
            PolicySpec::RankedExp3 { .. } => "RankedExp3",
        }
    }

    /// Fills unset parameters from the known-horizon schedules.
    pub fn resolve(&self, num_items: usize, horizon: u64) -> PolicySpec {
        match *self {
            PolicySpec::CascadeDucb { gamma, epsilon } => PolicySpec::CascadeDucb {
                gamma: Some(gamma.unwrap_or_else(|| gamma_for_horizon(horizon, None))),
                epsilon,
            },
            PolicySpec::CascadeSwucb { tau, epsilon } => PolicySpec::CascadeSwucb {
                tau: Some(tau.unwrap_or_else(|| tau_for_horizon(horizon, None))),
                epsilon,
            },
            PolicySpec::RankedExp3 { exploration } => PolicySpec::RankedExp3 {
                exploration: Some(
                    exploration.unwrap_or_else(|| default_exploration(num_items, horizon)),
                ),
            },
            ref other => other.clone(),
        }
    }

    /// Builds a fresh policy. `seed` drives the policy's own randomness, if any.
    pub fn build(
        &self,
        num_items: usize,
        k: usize,
        horizon: u64,
        seed: u64,
    ) -> Result<Box<dyn RankingPolicy>> {
        Ok(match self.resolve(num_items, horizon) {
            PolicySpec::CascadeDucb { gamma, epsilon } => Box::new(CascadeDucb::new(
                num_items,
                k,
                gamma.expect("resolved"),
                epsilon,
            )?),
            PolicySpec::CascadeSwucb { tau, epsilon } => Box::new(CascadeSwucb::new(
                num_items,
                k,
                tau.expect("resolved"),
                epsilon,
            )?),
            PolicySpec::CascadeUcb1 {} => Box::new(CascadeUcb1::new(num_items, k)?),
            PolicySpec::CascadeKlUcb {} => Box::new(CascadeKlUcb::new(num_items, k)?),
            PolicySpec::RankedExp3 { exploration } => Box::new(RankedExp3::new(
                num_items,
                k,
                exploration.expect("resolved"),
                seed,
            )?),
        })
    }
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::CascadeDucb { gamma, epsilon } => {
                write!(f, "{}(", self.display_name())?;
                match gamma {
                    Some(g) => write!(f, "gamma={g}")?,
                    None => write!(f, "gamma=auto")?,
                }
                write!(f, " epsilon={epsilon})")
            }
            PolicySpec::CascadeSwucb { tau, epsilon } => {
                write!(f, "{}(", self.display_name())?;
                match tau {
                    Some(t) => write!(f, "tau={t}")?,
                    None => write!(f, "tau=auto")?,
                }
                write!(f, " epsilon={epsilon})")
            }
            PolicySpec::RankedExp3 { exploration } => match exploration {
                Some(e) => write!(f, "{}(exploration={e})", self.display_name()),
                None => write!(f, "{}(exploration=auto)", self.display_name()),
            },
            other => write!(f, "{}", other.display_name()),
        }
    }
}
