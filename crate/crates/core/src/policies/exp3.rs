use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ClickOutcome, ItemId, RankedList};

use super::{check_dims, check_feedback, RankingPolicy};

/// Weights are rescaled once any of them exceeds this value.
const RESCALE_ABOVE: f64 = 1e150;

/// `sqrt(ln L / (L n))`, capped at 1.
pub fn default_exploration(num_items: usize, horizon: u64) -> f64 {
    let l = num_items.max(1) as f64;
    (l.ln() / (l * horizon.max(1) as f64)).sqrt().min(1.0)
}

/// Ranked bandit with one Exp3 learner per position.
///
/// Position `i` is rewarded when the click lands on it. Positions after the
/// click were not examined and get zero reward, which leaves their weights
/// untouched.
#[derive(Clone, Debug)]
pub struct RankedExp3 {
    num_items: usize,
    k: usize,
    exploration: f64,
    weights: Vec<Vec<f64>>,
    /// Probability with which each position's last item was chosen.
    chosen_prob: Vec<f64>,
    rng: ChaCha8Rng,
}

impl RankedExp3 {
    pub fn new(num_items: usize, k: usize, exploration: f64, seed: u64) -> Result<Self> {
        check_dims(num_items, k)?;
        if !(0.0..=1.0).contains(&exploration) {
            return Err(Error::invalid(format!(
                "exploration rate {exploration} must be in [0, 1]"
            )));
        }
        Ok(RankedExp3 {
            num_items,
            k,
            exploration,
            weights: vec![vec![1.0; num_items]; k],
            chosen_prob: vec![0.0; k],
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn weights(&self, position: usize) -> &[f64] {
        &self.weights[position - 1]
    }

    /// Sampling distribution of a 1-based position: weights mixed with the uniform.
    pub fn distribution(&self, position: usize) -> Vec<f64> {
        let w = &self.weights[position - 1];
        let total: f64 = w.iter().sum();
        let uniform = self.exploration / self.num_items as f64;
        w.iter()
            .map(|&x| (1.0 - self.exploration) * x / total + uniform)
            .collect()
    }

    fn sample(&mut self, probs: &[f64]) -> usize {
        let total: f64 = probs.iter().sum();
        let mut u = self.rng.random::<f64>() * total;
        let mut last = 0;
        for (i, &p) in probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            last = i;
            if u < p {
                return i;
            }
            u -= p;
        }
        last
    }
}

impl RankingPolicy for RankedExp3 {
    fn name(&self) -> &str {
        "RankedExp3"
    }

    fn select(&mut self, _t: u64) -> RankedList {
        let mut used = vec![false; self.num_items];
        let mut items = Vec::with_capacity(self.k);
        for pos in 1..=self.k {
            let probs = self.distribution(pos);
            let mut pick = self.sample(&probs);
            // Conditional on avoiding the items above, each free item is chosen
            // with probability p(a) / (1 - p(used)).
            let free_mass: f64 = probs
                .iter()
                .zip(&used)
                .filter(|(_, &u)| !u)
                .map(|(p, _)| p)
                .sum();
            if used[pick] {
                let restricted: Vec<f64> = probs
                    .iter()
                    .zip(&used)
                    .map(|(&p, &u)| if u { 0.0 } else { p })
                    .collect();
                pick = self.sample(&restricted);
            }
            used[pick] = true;
            self.chosen_prob[pos - 1] = probs[pick] / free_mass;
            items.push(ItemId::from_index(pick));
        }
        RankedList::new(items, self.num_items).expect("sampled items are distinct")
    }

    fn update(&mut self, _t: u64, list: &RankedList, click: ClickOutcome) -> Result<()> {
        check_feedback(list, click, self.num_items)?;
        let Some(pos) = click.clicked_position() else {
            return Ok(());
        };
        let item = list.items()[pos - 1].index();
        let prob = self.chosen_prob[pos - 1];
        if prob <= 0.0 {
            return Ok(());
        }
        let gain = 1.0 / prob;
        let w = &mut self.weights[pos - 1];
        w[item] *= (self.exploration * gain / self.num_items as f64).exp();
        if w[item] > RESCALE_ABOVE {
            let max = w.iter().copied().fold(0.0, f64::max);
            for x in w.iter_mut() {
                *x = (*x / max).max(f64::MIN_POSITIVE);
            }
        }
        Ok(())
    }
}
