use crate::error::Result;
use crate::model::{ClickOutcome, RankedList};

use super::{check_dims, check_feedback, select_list, RankingPolicy};

pub const UCB1_RADIUS_SCALE: f64 = 1.5;

/// `X/N + sqrt(1.5 ln t / N)`, or `+inf` for an unseen item.
pub fn ucb1_index(clicks: u64, observations: u64, steps: f64) -> f64 {
    if observations == 0 {
        return f64::INFINITY;
    }
    let n = observations as f64;
    clicks as f64 / n + (UCB1_RADIUS_SCALE * steps.ln().max(0.0) / n).sqrt()
}

/// Lifetime per-item observation and click counts under cascade feedback.
#[derive(Clone, Debug)]
pub(crate) struct LifetimeCounts {
    pub observations: Vec<u64>,
    pub clicks: Vec<u64>,
    pub steps: u64,
}

impl LifetimeCounts {
    pub fn new(num_items: usize) -> Self {
        LifetimeCounts {
            observations: vec![0; num_items],
            clicks: vec![0; num_items],
            steps: 0,
        }
    }

    pub fn record(&mut self, list: &RankedList, click: ClickOutcome) -> Result<()> {
        check_feedback(list, click, self.observations.len())?;
        for item in &list.items()[..click.examined()] {
            self.observations[item.index()] += 1;
        }
        if let Some(pos) = click.clicked_position() {
            self.clicks[list.items()[pos - 1].index()] += 1;
        }
        self.steps += 1;
        Ok(())
    }
}

/// Stationary cascade UCB1 baseline.
#[derive(Clone, Debug)]
pub struct CascadeUcb1 {
    k: usize,
    counts: LifetimeCounts,
}

impl CascadeUcb1 {
    pub fn new(num_items: usize, k: usize) -> Result<Self> {
        check_dims(num_items, k)?;
        Ok(CascadeUcb1 {
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
            .map(|(&n, &x)| ucb1_index(x, n, t))
            .collect()
    }
}

impl RankingPolicy for CascadeUcb1 {
    fn name(&self) -> &str {
        "CascadeUCB1"
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
    use approx::assert_relative_eq;

    #[test]
    fn index_values() {
        assert_eq!(ucb1_index(0, 0, 100.0), f64::INFINITY);
        let e2 = std::f64::consts::E.powi(2);
        assert_relative_eq!(ucb1_index(3, 6, e2), 0.5 + 0.5f64.sqrt(), epsilon = 1e-15);
        assert!((ucb1_index(3, 6, e2) - 1.2071).abs() < 1e-4);
        let all = ucb1_index(6, 6, e2);
        assert!(all > 1.0 && all.is_finite());
    }

    #[test]
    fn counts_follow_cascade_feedback() {
        let mut p = CascadeUcb1::new(4, 3).unwrap();
        let list = RankedList::from_ids(&[3, 1, 2], 4).unwrap();
        p.update(1, &list, ClickOutcome::new(2, 3).unwrap())
            .unwrap();
        assert_eq!(p.observations(), &[1, 0, 1, 0]);
        assert_eq!(p.clicks(), &[1, 0, 0, 0]);
        let next = p.select(2);
        // Items 2 and 4 were never observed and come first.
        assert_eq!(
            &next.items()[..2],
            RankedList::from_ids(&[2, 4], 4).unwrap().items()
        );
    }
}
