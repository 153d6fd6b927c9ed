//! Cascade click model: items, ranked lists, click outcomes and rewards.
//!
//! A user scans a ranked list top-down and clicks the first attractive item.
//! The reward of a list is whether any click happened, so it only depends on
//! the set of shown items and not on their order.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// 1-based item identifier in `1..=L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(u32);

impl ItemId {
    pub fn new(id: u32) -> Result<Self> {
        if id == 0 {
            return Err(Error::invalid("item ids are 1-based; got 0"));
        }
        Ok(ItemId(id))
    }

    /// Item for a 0-based slot in a per-item vector.
    pub fn from_index(index: usize) -> Self {
        ItemId(index as u32 + 1)
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// 0-based slot of this item in per-item vectors.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Per-item attraction probabilities, one entry per item in `1..=L`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AttractionVector(Vec<f64>);

impl AttractionVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid(
                "attraction vector must have at least one item",
            ));
        }
        if let Some((i, p)) = probs
            .iter()
            .enumerate()
            .find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::invalid(format!(
                "attraction probability of item {} is {p}, outside [0, 1]",
                i + 1
            )));
        }
        Ok(AttractionVector(probs))
    }

    /// Number of items `L`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, item: ItemId) -> f64 {
        self.0[item.index()]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for AttractionVector {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        AttractionVector::new(value)
    }
}

impl From<AttractionVector> for Vec<f64> {
    fn from(value: AttractionVector) -> Self {
        value.0
    }
}

/// An ordered list of `K` distinct items drawn from `1..=L`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RankedList(Vec<ItemId>);

impl RankedList {
    /// Validates that the items are distinct, non-empty and all within `1..=num_items`.
    pub fn new(items: Vec<ItemId>, num_items: usize) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::invalid("ranked list must contain at least one item"));
        }
        if items.len() > num_items {
            return Err(Error::invalid(format!(
                "ranked list has {} items but only {num_items} exist",
                items.len()
            )));
        }
        let mut seen = vec![false; num_items];
        for item in &items {
            let slot = seen
                .get_mut(item.index())
                .ok_or_else(|| Error::invalid(format!("item {item} is outside 1..={num_items}")))?;
            if *slot {
                return Err(Error::invalid(format!("item {item} appears twice")));
            }
            *slot = true;
        }
        Ok(RankedList(items))
    }

    /// Convenience constructor from raw 1-based ids.
    pub fn from_ids(ids: &[u32], num_items: usize) -> Result<Self> {
        let items = ids
            .iter()
            .map(|&id| ItemId::new(id))
            .collect::<Result<Vec<_>>>()?;
        RankedList::new(items, num_items)
    }

    /// Number of positions `K`.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    /// Item at a 1-based position.
    pub fn at(&self, position: usize) -> Option<ItemId> {
        position.checked_sub(1).and_then(|i| self.0.get(i).copied())
    }

    /// 1-based position of `item`, if shown.
    pub fn position_of(&self, item: ItemId) -> Option<usize> {
        self.0.iter().position(|&a| a == item).map(|i| i + 1)
    }

    pub(crate) fn max_item(&self) -> ItemId {
        self.0
            .iter()
            .copied()
            .max()
            .expect("ranked lists are non-empty")
    }
}

/// Which items would be clicked if examined (one flag per item in `1..=L`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttractionRealization(Vec<bool>);

impl AttractionRealization {
    pub fn new(attracted: Vec<bool>) -> Self {
        AttractionRealization(attracted)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_attracted(&self, item: ItemId) -> bool {
        self.0[item.index()]
    }
}

/// Position of the first click in `1..=K`, or `K + 1` when nothing was clicked.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ClickOutcome {
    position: usize,
    slots: usize,
}

impl ClickOutcome {
    /// `position` must lie in `1..=slots + 1`.
    pub fn new(position: usize, slots: usize) -> Result<Self> {
        if slots == 0 || position == 0 || position > slots + 1 {
            return Err(Error::invalid(format!(
                "click position {position} is outside 1..={} for a list of {slots} items",
                slots + 1
            )));
        }
        Ok(ClickOutcome { position, slots })
    }

    pub fn no_click(slots: usize) -> Self {
        ClickOutcome {
            position: slots + 1,
            slots,
        }
    }

    /// Raw 1-based position; equals `slots() + 1` for no click.
    pub fn position(self) -> usize {
        self.position
    }

    /// Length `K` of the list this outcome refers to.
    pub fn slots(self) -> usize {
        self.slots
    }

    pub fn is_click(self) -> bool {
        self.position <= self.slots
    }

    pub fn clicked_position(self) -> Option<usize> {
        self.is_click().then_some(self.position)
    }

    /// Number of leading positions the user examined: `min(c, K)`.
    pub fn examined(self) -> usize {
        self.position.min(self.slots)
    }
}

fn check_covers(list: &RankedList, len: usize, what: &str) -> Result<()> {
    let max = list.max_item();
    if max.index() >= len {
        return Err(Error::invalid(format!(
            "list shows item {max} but the {what} only covers {len} items"
        )));
    }
    Ok(())
}

/// `1 - prod(1 - A(R(i)))`: whether any shown item was attractive.
pub fn realized_reward(list: &RankedList, realization: &AttractionRealization) -> Result<bool> {
    check_covers(list, realization.len(), "realization")?;
    Ok(list.items().iter().any(|&a| realization.is_attracted(a)))
}

/// Probability that the user clicks anything: `1 - prod(1 - alpha(R(i)))`.
///
/// Factors are multiplied in sorted order so the result is bit-identical for
/// every permutation of the list.
pub fn expected_reward(list: &RankedList, alpha: &AttractionVector) -> Result<f64> {
    check_covers(list, alpha.len(), "attraction vector")?;
    Ok(expected_reward_unchecked(list, alpha))
}

pub(crate) fn expected_reward_unchecked(list: &RankedList, alpha: &AttractionVector) -> f64 {
    let mut probs: Vec<f64> = list.items().iter().map(|&a| alpha.get(a)).collect();
    probs.sort_by(|a, b| b.total_cmp(a));
    1.0 - probs.iter().map(|p| 1.0 - p).product::<f64>()
}

pub fn first_click_position(
    list: &RankedList,
    realization: &AttractionRealization,
) -> Result<ClickOutcome> {
    check_covers(list, realization.len(), "realization")?;
    let k = list.len();
    let position = list
        .items()
        .iter()
        .position(|&a| realization.is_attracted(a))
        .map_or(k + 1, |i| i + 1);
    Ok(ClickOutcome { position, slots: k })
}

/// Orders item slots by decreasing score, ties to the smaller id.
pub(crate) fn rank_by_score(scores: &[f64], k: usize) -> Vec<ItemId> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| match scores[b].total_cmp(&scores[a]) {
        Ordering::Equal => a.cmp(&b),
        other => other,
    });
    order.truncate(k);
    order.into_iter().map(ItemId::from_index).collect()
}

/// The `k` most attractive items in decreasing attraction, ties to the smaller id.
pub fn optimal_list(alpha: &AttractionVector, k: usize) -> Result<RankedList> {
    if k == 0 || k > alpha.len() {
        return Err(Error::invalid(format!(
            "list length K={k} must be in 1..=L={}",
            alpha.len()
        )));
    }
    Ok(RankedList(rank_by_score(alpha.as_slice(), k)))
}

/// Expected reward lost by showing `list` instead of the best list of the same length.
pub fn per_step_regret(list: &RankedList, alpha: &AttractionVector) -> Result<f64> {
    let best = optimal_list(alpha, list.len())?;
    let reward = expected_reward(list, alpha)?;
    Ok(regret_against(
        expected_reward_unchecked(&best, alpha),
        reward,
    ))
}

pub(crate) fn regret_against(best_reward: f64, reward: f64) -> f64 {
    (best_reward - reward).max(0.0)
}

/// Closed-form distribution of the click position: entry `i - 1` is
/// `P(c = i) = alpha(R(i)) * prod_{j<i} (1 - alpha(R(j)))`, and the last entry
/// is the no-click probability.
pub fn click_distribution(list: &RankedList, alpha: &AttractionVector) -> Result<Vec<f64>> {
    check_covers(list, alpha.len(), "attraction vector")?;
    let mut examine = 1.0;
    let mut out = Vec::with_capacity(list.len() + 1);
    for &a in list.items() {
        let p = alpha.get(a);
        out.push(examine * p);
        examine *= 1.0 - p;
    }
    out.push(examine);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn alpha(v: &[f64]) -> AttractionVector {
        AttractionVector::new(v.to_vec()).unwrap()
    }

    fn list(ids: &[u32], l: usize) -> RankedList {
        RankedList::from_ids(ids, l).unwrap()
    }

    fn realization(bits: &[u8]) -> AttractionRealization {
        AttractionRealization::new(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn realized_reward_cases() {
        let r = list(&[1, 2, 3], 5);
        assert!(!realized_reward(&r, &realization(&[0, 0, 0, 0, 0])).unwrap());
        assert!(realized_reward(&r, &realization(&[1, 0, 0, 0, 0])).unwrap());
        let r = list(&[2, 3], 5);
        assert!(realized_reward(&r, &realization(&[0, 0, 1, 0, 0])).unwrap());
    }

    #[test]
    fn realized_reward_rejects_short_realization() {
        let r = list(&[1, 4], 5);
        assert!(realized_reward(&r, &realization(&[1, 0])).is_err());
    }

    #[test]
    fn expected_reward_cases() {
        let r = list(&[1, 2, 3], 3);
        assert_eq!(expected_reward(&r, &alpha(&[0.0, 0.0, 0.0])).unwrap(), 0.0);
        assert_eq!(expected_reward(&r, &alpha(&[1.0, 0.3, 0.7])).unwrap(), 1.0);
        assert_relative_eq!(
            expected_reward(&r, &alpha(&[0.5, 0.5, 0.5])).unwrap(),
            0.875
        );
    }

    #[test]
    fn first_click_cases() {
        let r = list(&[1, 2, 3], 3);
        assert_eq!(
            first_click_position(&r, &realization(&[0, 1, 1]))
                .unwrap()
                .position(),
            2
        );
        let none = first_click_position(&r, &realization(&[0, 0, 0])).unwrap();
        assert_eq!(none.position(), 4);
        assert!(!none.is_click());
        let r = list(&[1], 1);
        assert_eq!(
            first_click_position(&r, &realization(&[1]))
                .unwrap()
                .position(),
            1
        );
    }

    #[test]
    fn optimal_list_cases() {
        assert_eq!(
            optimal_list(&alpha(&[0.9, 0.1, 0.5]), 2).unwrap(),
            list(&[1, 3], 3)
        );
        assert_eq!(
            optimal_list(&alpha(&[0.5, 0.5, 0.5]), 2).unwrap(),
            list(&[1, 2], 3)
        );
        assert_eq!(optimal_list(&alpha(&[0.2, 0.9]), 1).unwrap(), list(&[2], 2));
        assert!(optimal_list(&alpha(&[0.2, 0.9]), 3).is_err());
    }

    #[test]
    fn per_step_regret_cases() {
        let a = alpha(&[0.9, 0.5, 0.1]);
        let best = optimal_list(&a, 2).unwrap();
        assert_eq!(per_step_regret(&best, &a).unwrap(), 0.0);
        assert_relative_eq!(
            per_step_regret(&list(&[3], 3), &a).unwrap(),
            0.8,
            epsilon = 1e-15
        );
        let flat = alpha(&[0.5; 4]);
        for ids in [[1, 2], [3, 4], [4, 1], [2, 3]] {
            assert_eq!(per_step_regret(&list(&ids, 4), &flat).unwrap(), 0.0);
        }
    }

    #[test]
    fn ranked_list_validation() {
        assert!(RankedList::from_ids(&[1, 1], 3).is_err());
        assert!(RankedList::from_ids(&[1, 4], 3).is_err());
        assert!(RankedList::from_ids(&[0], 3).is_err());
        assert!(RankedList::from_ids(&[], 3).is_err());
        assert!(RankedList::from_ids(&[1, 2, 3, 4], 3).is_err());
    }

    #[test]
    fn click_outcome_bounds() {
        assert!(ClickOutcome::new(0, 3).is_err());
        assert!(ClickOutcome::new(5, 3).is_err());
        let c = ClickOutcome::new(4, 3).unwrap();
        assert_eq!(c.examined(), 3);
        assert_eq!(c.clicked_position(), None);
        assert_eq!(ClickOutcome::new(2, 3).unwrap().examined(), 2);
    }

    #[test]
    fn attraction_vector_range() {
        assert!(AttractionVector::new(vec![0.5, 1.2]).is_err());
        assert!(AttractionVector::new(vec![f64::NAN]).is_err());
        assert!(AttractionVector::new(vec![]).is_err());
    }

    #[test]
    fn click_distribution_sums_to_one() {
        let d = click_distribution(&list(&[2, 1], 3), &alpha(&[0.3, 0.6, 0.1])).unwrap();
        assert_relative_eq!(d[0], 0.6);
        assert_relative_eq!(d[1], 0.4 * 0.3);
        assert_relative_eq!(d.iter().sum::<f64>(), 1.0);
    }

    fn alpha_and_list() -> impl Strategy<Value = (Vec<f64>, Vec<u32>)> {
        (2usize..9)
            .prop_flat_map(|l| {
                (
                    proptest::collection::vec(0.0f64..=1.0, l),
                    Just((1..=l as u32).collect::<Vec<_>>()).prop_shuffle(),
                    1..=l,
                )
            })
            .prop_map(|(a, ids, k)| (a, ids[..k].to_vec()))
    }

    proptest! {
        #[test]
        fn expected_reward_is_permutation_invariant((a, ids) in alpha_and_list(), seed in any::<u64>()) {
            let l = a.len();
            let a = AttractionVector::new(a).unwrap();
            let mut shuffled = ids.clone();
            let rot = (seed as usize) % shuffled.len();
            shuffled.rotate_left(rot);
            shuffled.reverse();
            let r1 = expected_reward(&list(&ids, l), &a).unwrap();
            let r2 = expected_reward(&list(&shuffled, l), &a).unwrap();
            prop_assert_eq!(r1.to_bits(), r2.to_bits());
            prop_assert!((0.0..=1.0).contains(&r1));
        }

        #[test]
        fn expected_reward_is_monotone((a, ids) in alpha_and_list(), bump in 0.0f64..1.0, which in any::<usize>()) {
            let l = a.len();
            let mut raised = a.clone();
            let i = which % l;
            raised[i] = (raised[i] + bump).min(1.0);
            let r = list(&ids, l);
            let before = expected_reward(&r, &AttractionVector::new(a).unwrap()).unwrap();
            let after = expected_reward(&r, &AttractionVector::new(raised).unwrap()).unwrap();
            prop_assert!(after >= before);
        }

        #[test]
        fn regret_is_non_negative_and_zero_on_optimal_set((a, ids) in alpha_and_list()) {
            let l = a.len();
            let k = ids.len();
            let a = AttractionVector::new(a).unwrap();
            prop_assert!(per_step_regret(&list(&ids, l), &a).unwrap() >= 0.0);
            let mut best = optimal_list(&a, k).unwrap().items().to_vec();
            best.reverse();
            prop_assert_eq!(per_step_regret(&RankedList::new(best, l).unwrap(), &a).unwrap(), 0.0);
        }

        #[test]
        fn reward_matches_click(ids_len in 1usize..6, bits in proptest::collection::vec(any::<bool>(), 6)) {
            let ids: Vec<u32> = (1..=ids_len as u32).collect();
            let r = list(&ids, 6);
            let real = AttractionRealization::new(bits);
            let reward = realized_reward(&r, &real).unwrap();
            let click = first_click_position(&r, &real).unwrap();
            prop_assert_eq!(reward, click.position() <= r.len());
        }
    }
}
