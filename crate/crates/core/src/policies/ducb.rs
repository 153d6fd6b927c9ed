use crate::error::{Error, Result};
use crate::model::{ClickOutcome, RankedList};

use super::{check_dims, check_feedback, select_list, RankingPolicy};

/// `X/N + 2 sqrt(eps ln(N(gamma)) / N)`, or `+inf` for an item never observed.
pub fn ducb_index(clicks: f64, observations: f64, discounted_horizon: f64, epsilon: f64) -> f64 {
    if observations <= 0.0 {
        return f64::INFINITY;
    }
    let radius = 2.0 * (epsilon * discounted_horizon.ln().max(0.0) / observations).sqrt();
    clicks / observations + radius
}

/// Cascade UCB with geometrically discounted statistics.
///
/// After every step all counts are multiplied by `gamma`, then each examined
/// item gains one observation and the clicked item one click.
#[derive(Clone, Debug)]
pub struct CascadeDucb {
    k: usize,
    gamma: f64,
    epsilon: f64,
    observations: Vec<f64>,
    clicks: Vec<f64>,
    steps: u64,
}

impl CascadeDucb {
    /// `gamma` must lie in `(0, 1]`; `gamma = 1` keeps undiscounted counts.
    pub fn new(num_items: usize, k: usize, gamma: f64, epsilon: f64) -> Result<Self> {
        check_dims(num_items, k)?;
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(Error::invalid(format!(
                "discount γ={gamma} must be in (0, 1]"
            )));
        }
        if !(epsilon >= 0.0 && epsilon.is_finite()) {
            return Err(Error::invalid(format!(
                "confidence scale ε={epsilon} must be ≥ 0"
            )));
        }
        Ok(CascadeDucb {
            k,
            gamma,
            epsilon,
            observations: vec![0.0; num_items],
            clicks: vec![0.0; num_items],
            steps: 0,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.steps
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn clicks(&self) -> &[f64] {
        &self.clicks
    }

    /// `(1 - gamma^t) / (1 - gamma)` over the updates so far (`t` when `gamma = 1`).
    pub fn discounted_horizon(&self) -> f64 {
        if self.gamma == 1.0 {
            self.steps as f64
        } else {
            (1.0 - self.gamma.powf(self.steps as f64)) / (1.0 - self.gamma)
        }
    }

    pub fn ucbs(&self) -> Vec<f64> {
        let horizon = self.discounted_horizon();
        self.observations
            .iter()
            .zip(&self.clicks)
            .map(|(&n, &x)| ducb_index(x, n, horizon, self.epsilon))
            .collect()
    }
}

impl RankingPolicy for CascadeDucb {
    fn name(&self) -> &str {
        "CascadeDUCB"
    }

    fn select(&mut self, _t: u64) -> RankedList {
        select_list(&self.ucbs(), self.k).expect("K validated at construction")
    }

    fn update(&mut self, _t: u64, list: &RankedList, click: ClickOutcome) -> Result<()> {
        check_feedback(list, click, self.observations.len())?;
        if self.gamma != 1.0 {
            for (n, x) in self.observations.iter_mut().zip(self.clicks.iter_mut()) {
                *n *= self.gamma;
                *x *= self.gamma;
            }
        }
        for (i, item) in list.items()[..click.examined()].iter().enumerate() {
            self.observations[item.index()] += 1.0;
            if click.clicked_position() == Some(i + 1) {
                self.clicks[item.index()] += 1.0;
            }
        }
        self.steps += 1;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn index_values() {
        assert_eq!(ducb_index(0.0, 0.0, 10.0, 0.5), f64::INFINITY);
        // N(gamma) = e, so ln N(gamma) = 1.
        assert_relative_eq!(
            ducb_index(1.0, 2.0, std::f64::consts::E, 0.5),
            1.5,
            epsilon = 1e-15
        );
        let big = ducb_index(1e9, 1e9, 1e3, 0.5);
        assert!(big > 1.0 && big < 1.001);
    }

    #[test]
    fn radius_decreases_with_observations() {
        let r = |n: f64| ducb_index(0.0, n, 50.0, 0.5);
        assert!(r(1.0) > r(2.0) && r(2.0) > r(10.0));
    }

    #[test]
    fn no_click_observes_every_shown_item() {
        let mut p = CascadeDucb::new(5, 3, 0.9, 0.5).unwrap();
        let list = RankedList::from_ids(&[4, 2, 5], 5).unwrap();
        p.update(1, &list, ClickOutcome::no_click(3)).unwrap();
        assert_eq!(p.observations(), &[0.0, 1.0, 0.0, 1.0, 1.0]);
        assert_eq!(p.clicks(), &[0.0; 5]);
    }

    #[test]
    fn click_at_first_position_only_touches_that_item() {
        let mut p = CascadeDucb::new(4, 2, 0.5, 0.5).unwrap();
        let list = RankedList::from_ids(&[1, 2], 4).unwrap();
        p.update(1, &list, ClickOutcome::no_click(2)).unwrap();
        p.update(2, &list, ClickOutcome::new(1, 2).unwrap())
            .unwrap();
        assert_eq!(p.observations(), &[1.5, 0.5, 0.0, 0.0]);
        assert_eq!(p.clicks(), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(p.steps(), 2);
        assert_relative_eq!(p.discounted_horizon(), 1.5);
    }

    #[test]
    fn rejects_mismatched_click() {
        let mut p = CascadeDucb::new(4, 2, 0.5, 0.5).unwrap();
        let list = RankedList::from_ids(&[1, 2], 4).unwrap();
        assert!(p.update(1, &list, ClickOutcome::no_click(3)).is_err());
        assert!(CascadeDucb::new(4, 2, 0.0, 0.5).is_err());
        assert!(CascadeDucb::new(4, 2, 1.5, 0.5).is_err());
        assert!(CascadeDucb::new(4, 5, 0.9, 0.5).is_err());
    }

    #[test]
    fn unseen_items_are_shown_first() {
        let mut p = CascadeDucb::new(4, 2, 0.9, 0.5).unwrap();
        let first = p.select(1);
        assert_eq!(first, RankedList::from_ids(&[1, 2], 4).unwrap());
        p.update(1, &first, ClickOutcome::no_click(2)).unwrap();
        assert_eq!(p.select(2), RankedList::from_ids(&[3, 4], 4).unwrap());
    }

    fn random_trace(
        seed: u64,
        steps: usize,
        l: usize,
        k: usize,
    ) -> Vec<(RankedList, ClickOutcome)> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..steps)
            .map(|_| {
                let ids = rand::seq::index::sample(&mut rng, l, k);
                let list = RankedList::new(
                    ids.iter().map(crate::model::ItemId::from_index).collect(),
                    l,
                )
                .unwrap();
                let c = ClickOutcome::new(rng.random_range(1..=k + 1), k).unwrap();
                (list, c)
            })
            .collect()
    }

    #[test]
    fn undiscounted_counts_match_plain_counter() {
        let (l, k) = (7, 3);
        let trace = random_trace(17, 1000, l, k);
        let mut p = CascadeDucb::new(l, k, 1.0, 0.5).unwrap();
        let mut seen = vec![0u64; l];
        let mut clicked = vec![0u64; l];
        for (t, (list, c)) in trace.iter().enumerate() {
            p.update(t as u64 + 1, list, *c).unwrap();
            for pos in 1..=c.examined() {
                let a = list.at(pos).unwrap().index();
                seen[a] += 1;
                if c.clicked_position() == Some(pos) {
                    clicked[a] += 1;
                }
            }
            let expect_n: Vec<f64> = seen.iter().map(|&v| v as f64).collect();
            let expect_x: Vec<f64> = clicked.iter().map(|&v| v as f64).collect();
            assert_eq!(p.observations(), &expect_n[..]);
            assert_eq!(p.clicks(), &expect_x[..]);
        }
        assert_eq!(p.discounted_horizon(), 1000.0);
    }

    proptest! {
        #[test]
        fn discounted_counts_stay_within_cap(seed in any::<u64>(), gamma in 0.05f64..0.9999) {
            let (l, k) = (6, 2);
            let mut p = CascadeDucb::new(l, k, gamma, 0.5).unwrap();
            for (t, (list, c)) in random_trace(seed, 200, l, k).iter().enumerate() {
                p.update(t as u64 + 1, list, *c).unwrap();
                let cap = p.discounted_horizon();
                for (n, x) in p.observations().iter().zip(p.clicks()) {
                    prop_assert!(*x >= 0.0 && x <= n);
                    prop_assert!(*n <= cap * (1.0 + 1e-12));
                }
            }
        }
    }
}
