use crate::bounds::bernoulli_kl;
use crate::error::Result;
use crate::model::{ClickOutcome, RankedList};

use super::ucb1::LifetimeCounts;
use super::{check_dims, select_list, RankingPolicy};

pub const KL_UCB_TOLERANCE: f64 = 1e-9;
pub const KL_UCB_MAX_ITER: usize = 64;

/// Largest `q` in `[mean, 1]` with `count * d(mean || q) <= budget`, by bisection.
pub fn kl_ucb_root(mean: f64, count: f64, budget: f64) -> f64 {
    let mean = mean.clamp(0.0, 1.0);
    if mean >= 1.0 || budget <= 0.0 {
        return mean;
    }
    let within = |q: f64| count * bernoulli_kl(mean, q) <= budget;
    if within(1.0) {
        return 1.0;
    }
    let (mut lo, mut hi) = (mean, 1.0);
    for _ in 0..KL_UCB_MAX_ITER {
        if hi - lo <= KL_UCB_TOLERANCE {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if within(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Exploration budget `ln t + 3 ln ln t` (just `ln t` below `t = 2`), never negative.
pub fn klucb_budget(steps: f64) -> f64 {
    let log_t = steps.ln();
    let budget = if steps >= 2.0 {
        log_t + 3.0 * log_t.ln()
    } else {
        log_t
    };
    budget.max(0.0)
}

/// KL upper confidence index, or `+inf` for an unseen item.
pub fn klucb_index(clicks: u64, observations: u64, steps: f64) -> f64 {
    if observations == 0 {
        return f64::INFINITY;
    }
    let n = observations as f64;
    kl_ucb_root(clicks as f64 / n, n, klucb_budget(steps))
}

/// Stationary cascade KL-UCB baseline.
#[derive(Clone, Debug)]
pub struct CascadeKlUcb {
    k: usize,
    counts: LifetimeCounts,
}

impl CascadeKlUcb {
    pub fn new(num_items: usize, k: usize) -> Result<Self> {
        check_dims(num_items, k)?;
        Ok(CascadeKlUcb {
            k,
            counts: LifetimeCounts::new(num_items),
        })
    }

    pub fn observations(&self) -> &[u64] {
        &self.counts.observations
    }

    pub fn clicks(&self) -> &[u64] {
        &self.counts.clicks
    }

    pub fn ucbs(&self) -> Vec<f64> {
        let t = self.counts.steps as f64;
        self.counts
            .observations
            .iter()
            .zip(&self.counts.clicks)
            .map(|(&n, &x)| klucb_index(x, n, t))
            .collect()
    }
}

impl RankingPolicy for CascadeKlUcb {
    fn name(&self) -> &str {
        "CascadeKL-UCB"
    }

    fn select(&mut self, _t: u64) -> RankedList {
        select_list(&self.ucbs(), self.k).expect("K validated at construction")
    }

    fn update(&mut self, _t: u64, list: &RankedList, click: ClickOutcome) -> Result<()> {
        self.counts.record(list, click)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Largest grid point `q` in `[mean, 1]` whose divergence fits the budget.
    fn grid_root(mean: f64, count: f64, budget: f64, points: usize) -> f64 {
        let mut best = mean;
        for i in 0..=points {
            let q = mean + (1.0 - mean) * i as f64 / points as f64;
            let p = mean;
            let q_c = q.clamp(1e-15, 1.0 - 1e-15);
            let mut d = 0.0;
            if p > 0.0 {
                d += p * (p / q_c).ln();
            }
            if p < 1.0 {
                d += (1.0 - p) * ((1.0 - p) / (1.0 - q_c)).ln();
            }
            if count * d <= budget {
                best = q;
            }
        }
        best
    }

    #[test]
    fn degenerate_roots() {
        assert_eq!(kl_ucb_root(1.0, 10.0, 3.0), 1.0);
        assert_eq!(kl_ucb_root(0.3, 10.0, 0.0), 0.3);
        assert_eq!(klucb_index(0, 0, 10.0), f64::INFINITY);
        assert_eq!(klucb_index(5, 5, 100.0), 1.0);
    }

    #[test]
    fn root_matches_grid_scan() {
        let q = kl_ucb_root(0.5, 10.0, 2.0);
        assert!(q > 0.5 && q < 1.0);
        let grid = grid_root(0.5, 10.0, 2.0, 1_000_000);
        assert!((q - grid).abs() < 1e-6, "bisection {q} grid {grid}");
        for &(mean, count, budget) in &[(0.1, 50.0, 4.0), (0.0, 3.0, 1.0), (0.93, 200.0, 7.5)] {
            let q = kl_ucb_root(mean, count, budget);
            let grid = grid_root(mean, count, budget, 1_000_000);
            assert!((q - grid).abs() < 1e-6, "mean {mean}: {q} vs {grid}");
        }
    }

    #[test]
    fn budget_edges() {
        assert_eq!(klucb_budget(1.0), 0.0);
        // ln 2 + 3 ln ln 2 < 0 is floored at zero.
        assert_eq!(klucb_budget(2.0), 0.0);
        let t = 1000.0f64;
        assert!((klucb_budget(t) - (t.ln() + 3.0 * t.ln().ln())).abs() < 1e-12);
    }

    #[test]
    fn index_shrinks_with_more_data() {
        let few = klucb_index(5, 10, 1000.0);
        let many = klucb_index(500, 1000, 1000.0);
        assert!(few > many && many > 0.5);
    }
}
