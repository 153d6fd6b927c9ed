use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::{ClickOutcome, ItemId, RankedList};

use super::{check_dims, check_feedback, select_list, RankingPolicy};

/// `X/N + sqrt(eps ln(min(t, tau)) / N)`, or `+inf` for an item unseen in the window.
pub fn swucb_index(clicks: u64, observations: u64, steps: u64, tau: u64, epsilon: f64) -> f64 {
    if observations == 0 {
        return f64::INFINITY;
    }
    let n = observations as f64;
    let span = steps.min(tau).max(1) as f64;
    clicks as f64 / n + (epsilon * span.ln() / n).sqrt()
}

/// The observed prefix of one past step.
#[derive(Clone, Debug)]
struct WindowEntry {
    examined: Vec<ItemId>,
    /// The last examined item was clicked.
    clicked: bool,
}

/// Cascade UCB over the last `tau` steps only.
///
/// Counts are maintained incrementally: each update adds the new step's
/// examined prefix and subtracts the step that leaves the window.
#[derive(Clone, Debug)]
pub struct CascadeSwucb {
    k: usize,
    tau: u64,
    epsilon: f64,
    window: VecDeque<WindowEntry>,
    observations: Vec<u64>,
    clicks: Vec<u64>,
    steps: u64,
}

impl CascadeSwucb {
    pub fn new(num_items: usize, k: usize, tau: u64, epsilon: f64) -> Result<Self> {
        check_dims(num_items, k)?;
        if tau == 0 {
            return Err(Error::invalid("window length τ must be at least 1"));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "confidence scale ε={epsilon} must be ≥ 0"
            )));
        }
        Ok(CascadeSwucb {
            k,
            tau,
            epsilon,
            window: VecDeque::with_capacity(tau.min(1 << 20) as usize),
            observations: vec![0; num_items],
            clicks: vec![0; num_items],
            steps: 0,
        })
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn observations(&self) -> &[u64] {
        &self.observations
    }

    pub fn clicks(&self) -> &[u64] {
        &self.clicks
    }

    pub fn window_len(&self) -> usize {
        self.window.len()
    }

    pub fn ucbs(&self) -> Vec<f64> {
        self.observations
            .iter()
            .zip(&self.clicks)
            .map(|(&n, &x)| swucb_index(x, n, self.steps, self.tau, self.epsilon))
            .collect()
    }
}

impl RankingPolicy for CascadeSwucb {
    fn name(&self) -> &str {
        "CascadeSWUCB"
    }

    fn select(&mut self, _t: u64) -> RankedList {
        select_list(&self.ucbs(), self.k).expect("K validated at construction")
    }

    fn update(&mut self, _t: u64, list: &RankedList, click: ClickOutcome) -> Result<()> {
        check_feedback(list, click, self.observations.len())?;
        if self.window.len() as u64 == self.tau {
            let old = self.window.pop_front().expect("window is full");
            for item in &old.examined {
                self.observations[item.index()] -= 1;
            }
            if old.clicked {
                let last = old.examined.last().expect("at least one item is examined");
                self.clicks[last.index()] -= 1;
            }
        }
        let examined = list.items()[..click.examined()].to_vec();
        for item in &examined {
            self.observations[item.index()] += 1;
        }
        if let Some(pos) = click.clicked_position() {
            self.clicks[list.items()[pos - 1].index()] += 1;
        }
        self.window.push_back(WindowEntry {
            examined,
            clicked: click.is_click(),
        });
        self.steps += 1;
        Ok(())
    }
}
