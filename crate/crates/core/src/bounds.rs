//! Closed-form regret bounds and the discount/window schedules derived from them.

use std::f64::consts::E;

use crate::error::{Error, Result};

/// Clamp applied to the second KL argument to keep logarithms finite.
pub const KL_CLAMP: f64 = 1e-15;

/// Smallest gap accepted by [`regret_lower_bound`].
pub const MIN_LOWER_BOUND_GAP: f64 = 1e-12;

/// Bernoulli KL divergence `d(p || q)` with `0 ln 0 = 0`; `q` is clamped to
/// `[KL_CLAMP, 1 - KL_CLAMP]`.
pub fn bernoulli_kl(p: f64, q: f64) -> f64 {
    let q = q.clamp(KL_CLAMP, 1.0 - KL_CLAMP);
    let term = |x: f64, y: f64| if x <= 0.0 { 0.0 } else { x * (x / y).ln() };
    (term(p, q) + term(1.0 - p, 1.0 - q)).max(0.0)
}

/// Per-item minimal gaps `Delta_{a,K}`. `None` marks an item that is optimal at
/// every step; such items are left out of the bound sums.
#[derive(Clone, Debug, PartialEq)]
pub struct GapProfile(pub Vec<Option<f64>>);

impl GapProfile {
    pub fn uniform(num_items: usize, gap: f64) -> Self {
        GapProfile(vec![Some(gap); num_items])
    }

    fn charged(&self) -> Result<impl Iterator<Item = f64> + '_> {
        if let Some(g) = self.0.iter().flatten().find(|g| g.is_nan() || **g <= 0.0) {
            return Err(Error::BoundPrecondition(format!(
                "gaps must be positive; got {g}"
            )));
        }
        Ok(self.0.iter().flatten().copied())
    }
}

/// Problem and algorithm parameters shared by the upper bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundInputs {
    pub num_items: usize,
    pub horizon: u64,
    pub breakpoints: u64,
    pub gamma: f64,
    pub tau: u64,
    pub epsilon: f64,
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.5 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(Error::BoundPrecondition(format!(
            "ε ∈ (1/2,1) is required; got ε = {epsilon}"
        )))
    }
}

fn check_gaps(inputs: &BoundInputs, gaps: &GapProfile) -> Result<()> {
    if gaps.0.len() != inputs.num_items {
        return Err(Error::BoundPrecondition(format!(
            "gap profile has {} entries but L = {}",
            gaps.0.len(),
            inputs.num_items
        )));
    }
    if inputs.horizon == 0 {
        return Err(Error::BoundPrecondition("n ≥ 1 is required".into()));
    }
    Ok(())
}

/// `ln(1 + 4 sqrt(1 - 1/(2 eps)))`, shared by both upper bounds.
fn confidence_log(epsilon: f64) -> f64 {
    (1.0 + 4.0 * (1.0 - 1.0 / (2.0 * epsilon)).sqrt()).ln()
}

/// Upper bound on the expected n-step regret of the discounted cascade UCB.
pub fn ducb_upper_bound(inputs: &BoundInputs, gaps: &GapProfile) -> Result<f64> {
    check_epsilon(inputs.epsilon)?;
    let gamma = inputs.gamma;
    if !(gamma > 0.5 && gamma < 1.0) {
        return Err(Error::BoundPrecondition(format!(
            "γ ∈ (1/2,1) is required; got γ = {gamma}"
        )));
    }
    check_gaps(inputs, gaps)?;
    let eps = inputs.epsilon;
    let l = inputs.num_items as f64;
    let n = inputs.horizon as f64;

    let bias = l * inputs.breakpoints as f64 * ((1.0 - gamma) * eps).ln() / gamma.ln();
    let constant = 4.0 / (1.0 - 1.0 / E) * confidence_log(eps);
    let decay = gamma.powf(1.0 / (1.0 - gamma));
    let scale = (n * (1.0 - gamma)).ceil() * (1.0 / (1.0 - gamma)).ln();
    let per_item: f64 = gaps
        .charged()?
        .map(|gap| constant + 32.0 * eps / (gap * decay))
        .sum();
    Ok(bias + per_item * scale)
}

/// Upper bound on the expected n-step regret of the sliding-window cascade UCB.
pub fn swucb_upper_bound(inputs: &BoundInputs, gaps: &GapProfile) -> Result<f64> {
    check_epsilon(inputs.epsilon)?;
    if inputs.tau == 0 {
        return Err(Error::BoundPrecondition(
            "τ ≥ 1 is required; got τ = 0".into(),
        ));
    }
    check_gaps(inputs, gaps)?;
    let eps = inputs.epsilon;
    let l = inputs.num_items as f64;
    let n = inputs.horizon as f64;
    let tau = inputs.tau as f64;
    let ln_tau = tau.ln();
    let c = confidence_log(eps);

    let bias = l * inputs.breakpoints as f64 * tau;
    let deviation = l * ln_tau * ln_tau / c;
    // C(tau, a) * n ln(tau) / tau, expanded so that tau = 1 (ln tau = 0) stays finite.
    let windows = (n / tau).ceil();
    let per_item: f64 = gaps
        .charged()?
        .map(|gap| 2.0 * (ln_tau / c).ceil() * n / tau + 8.0 * eps / gap * windows * ln_tau)
        .sum();
    Ok(bias + deviation + per_item)
}

/// Limit of the per-item constant `C(tau, a)` as `tau -> inf` with `n / tau -> 0`.
pub fn swucb_item_constant_limit(epsilon: f64, gap: f64) -> f64 {
    2.0 / confidence_log(epsilon) + 8.0 * epsilon / gap
}

/// Per-item constant `C(tau, a)` at finite `tau >= 2`.
pub fn swucb_item_constant(epsilon: f64, gap: f64, tau: u64, horizon: u64) -> f64 {
    let ln_tau = (tau as f64).ln();
    let ratio = horizon as f64 / tau as f64;
    2.0 / ln_tau * (ln_tau / confidence_log(epsilon)).ceil()
        + 8.0 * epsilon / gap * ratio.ceil() / ratio
}

/// Asymptotic lower bound `L Δ (1-p)^{K-1} sqrt(2n / (3 d(p-Δ || p)))`.
pub fn regret_lower_bound(
    num_items: usize,
    k: usize,
    delta: f64,
    p: f64,
    horizon: u64,
) -> Result<f64> {
    if !(delta > 0.0 && delta <= p && p < 1.0) {
        return Err(Error::BoundPrecondition(format!(
            "0 < Δ ≤ p < 1 is required; got Δ = {delta}, p = {p}"
        )));
    }
    if delta < MIN_LOWER_BOUND_GAP {
        return Err(Error::BoundPrecondition(format!(
            "Δ = {delta} is below {MIN_LOWER_BOUND_GAP}; the KL term degenerates"
        )));
    }
    if k == 0 || k > num_items {
        return Err(Error::BoundPrecondition(format!(
            "1 ≤ K ≤ L is required; got K = {k}, L = {num_items}"
        )));
    }
    let kl = bernoulli_kl(p - delta, p);
    if kl.is_nan() || kl <= 0.0 {
        return Err(Error::BoundPrecondition(format!(
            "KL divergence d({} || {p}) is zero",
            p - delta
        )));
    }
    let n = horizon as f64;
    Ok(num_items as f64 * delta * (1.0 - p).powi(k as i32 - 1) * (2.0 * n / (3.0 * kl)).sqrt())
}

const GAMMA_FLOOR: f64 = 0.5 + 1e-12;
const GAMMA_CEIL: f64 = 1.0 - 1e-12;

/// Discount factor for a known horizon: `1 - sqrt(Υ/n)/4` when the number of
/// breakpoints is known, `1 - 1/(4 sqrt n)` otherwise; kept inside `(1/2, 1)`.
pub fn gamma_for_horizon(horizon: u64, breakpoints: Option<u64>) -> f64 {
    let n = horizon.max(1) as f64;
    let gamma = match breakpoints {
        Some(u) => 1.0 - 0.25 * (u as f64 / n).sqrt(),
        None => 1.0 - 1.0 / (4.0 * n.sqrt()),
    };
    gamma.clamp(GAMMA_FLOOR, GAMMA_CEIL)
}

/// Window length for a known horizon: `2 sqrt(n ln n / Υ)` when the number of
/// breakpoints is known, `2 sqrt(n ln n)` otherwise; rounded up, at least 1.
/// A known count of zero breakpoints yields a window of the whole horizon.
pub fn tau_for_horizon(horizon: u64, breakpoints: Option<u64>) -> u64 {
    let n = horizon.max(1) as f64;
    let base = n * n.ln();
    let tau = match breakpoints {
        Some(0) => return horizon.max(1),
        Some(u) => 2.0 * (base / u as f64).sqrt(),
        None => 2.0 * base.sqrt(),
    };
    (tau.ceil() as u64).max(1)
}

/// Parameters for an unknown horizon: with `2^k <= t < 2^{k+1}`,
/// `gamma = 1 - 1/(4 sqrt(2^k))` and `tau = ceil(2 sqrt(2^k ln 2^k))`.
pub fn doubling_schedule(t: u64) -> (f64, u64) {
    let t = t.max(1);
    let k = 63 - t.leading_zeros();
    let block = (1u64 << k) as f64;
    let gamma = 1.0 - 1.0 / (4.0 * block.sqrt());
    let tau = ((2.0 * (block * block.ln()).sqrt()).ceil() as u64).max(1);
    (gamma, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inputs(breakpoints: u64, gamma: f64, tau: u64, epsilon: f64) -> BoundInputs {
        BoundInputs {
            num_items: 10,
            horizon: 100_000,
            breakpoints,
            gamma,
            tau,
            epsilon,
        }
    }

    #[test]
    fn kl_values() {
        assert_relative_eq!(bernoulli_kl(0.3, 0.3), 0.0, epsilon = 1e-14);
        assert_relative_eq!(
            bernoulli_kl(0.0, 0.5),
            std::f64::consts::LN_2,
            epsilon = 1e-15
        );
        assert_relative_eq!(
            bernoulli_kl(0.25, 0.5),
            bernoulli_kl(0.75, 0.5),
            epsilon = 1e-15
        );
        assert!(bernoulli_kl(0.5, 1.0).is_finite());
        assert!(bernoulli_kl(1.0, 0.0).is_finite());
        // The clamp leaves a residue of about 1e-15.
        assert_relative_eq!(bernoulli_kl(1.0, 1.0), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn lower_bound_example() {
        // d(0.25 || 0.5) = 0.25 ln 0.5 + 0.75 ln 1.5
        let kl = 0.25 * 0.5f64.ln() + 0.75 * 1.5f64.ln();
        assert_relative_eq!(kl, 0.130812035941137, epsilon = 1e-12);
        let hand = 2.0 * 0.25 * (20_000.0 / (3.0 * kl)).sqrt();
        let bound = regret_lower_bound(2, 1, 0.25, 0.5, 10_000).unwrap();
        assert_relative_eq!(bound, hand, epsilon = 1e-9);
        assert!((bound - 112.9).abs() < 0.5);
    }

    #[test]
    fn lower_bound_guards_and_scaling() {
        assert!(regret_lower_bound(2, 1, 0.0, 0.5, 100).is_err());
        assert!(regret_lower_bound(2, 1, 1e-13, 0.5, 100).is_err());
        assert!(regret_lower_bound(2, 1, 0.6, 0.5, 100).is_err());
        assert!(regret_lower_bound(2, 1, 1.0, 1.0, 100).is_err());
        assert!(regret_lower_bound(2, 3, 0.1, 0.5, 100).is_err());
        let one = regret_lower_bound(6, 3, 0.1, 0.4, 1_000).unwrap();
        let four = regret_lower_bound(6, 3, 0.1, 0.4, 4_000).unwrap();
        assert_relative_eq!(four / one, 2.0, epsilon = 1e-14);
        // K = 1 drops the (1 - p)^{K-1} factor.
        let k1 = regret_lower_bound(6, 1, 0.1, 0.4, 1_000).unwrap();
        assert_relative_eq!(one / k1, 0.6 * 0.6, epsilon = 1e-14);
    }

    #[test]
    fn gamma_schedules() {
        assert_relative_eq!(gamma_for_horizon(10_000, None), 0.9975, epsilon = 1e-15);
        assert_relative_eq!(gamma_for_horizon(16, Some(1)), 0.9375, epsilon = 1e-15);
        assert_relative_eq!(gamma_for_horizon(100, Some(100)), 0.75, epsilon = 1e-15);
        let g = gamma_for_horizon(100, Some(0));
        assert!(g > 0.5 && g < 1.0);
        let g = gamma_for_horizon(1, Some(100));
        assert!(g > 0.5 && g < 1.0);
    }

    #[test]
    fn tau_schedules() {
        assert_eq!(tau_for_horizon(10_000, None), 607);
        let n = 10_000u64;
        let upsilon = ((n as f64) * (n as f64).ln()).ceil() as u64;
        assert_eq!(tau_for_horizon(n, Some(upsilon)), 2);
        assert!(tau_for_horizon(8, None) >= 1);
        assert_eq!(tau_for_horizon(500, Some(0)), 500);
        assert_eq!(tau_for_horizon(1, None), 1);
    }

    #[test]
    fn doubling() {
        let (g, t) = doubling_schedule(5);
        assert_eq!(g, 0.875);
        assert_eq!(t, 5);
        assert_eq!(doubling_schedule(1), (0.75, 1));
        assert_eq!(doubling_schedule(4), doubling_schedule(7));
        assert_ne!(doubling_schedule(7), doubling_schedule(8));
        for k in 1..20u32 {
            let at = doubling_schedule(1 << k);
            assert_eq!(at, doubling_schedule((1 << (k + 1)) - 1));
            assert_ne!(at, doubling_schedule((1 << k) - 1));
        }
    }

    #[test]
    fn ducb_bound_zero_breakpoints_has_no_bias_term() {
        let gaps = GapProfile::uniform(10, 0.1);
        let with = ducb_upper_bound(&inputs(5, 0.99, 100, 0.75), &gaps).unwrap();
        let without = ducb_upper_bound(&inputs(0, 0.99, 100, 0.75), &gaps).unwrap();
        let bias = 10.0 * 5.0 * (0.01f64 * 0.75).ln() / 0.99f64.ln();
        assert_relative_eq!(with - without, bias, max_relative = 1e-12);
    }

    #[test]
    fn ducb_bound_infinite_gaps_leave_constant_part() {
        // 1 - gamma is exact, so the ceiling in the scale term is too.
        let (eps, gamma) = (0.75f64, 0.75f64);
        let gaps = GapProfile::uniform(10, f64::INFINITY);
        let got = ducb_upper_bound(&inputs(3, gamma, 100, eps), &gaps).unwrap();
        // Hand evaluation term by term.
        let first = 10.0 * 3.0 * (0.25 * 0.75f64).ln() / 0.75f64.ln();
        let c = 4.0 / (1.0 - (-1.0f64).exp()) * (1.0 + 4.0 * (1.0 - 1.0 / 1.5f64).sqrt()).ln();
        let scale = 25_000.0 * 4.0f64.ln();
        assert_relative_eq!(got, first + 10.0 * c * scale, max_relative = 1e-12);
    }

    #[test]
    fn perpetually_optimal_items_are_excluded() {
        let mut gaps = GapProfile::uniform(10, 0.1);
        let all = ducb_upper_bound(&inputs(0, 0.99, 100, 0.75), &gaps).unwrap();
        gaps.0[0] = None;
        let fewer = ducb_upper_bound(&inputs(0, 0.99, 100, 0.75), &gaps).unwrap();
        assert_relative_eq!(fewer, all * 0.9, max_relative = 1e-12);
    }

    #[test]
    fn bound_preconditions() {
        let gaps = GapProfile::uniform(10, 0.1);
        let err = ducb_upper_bound(&inputs(1, 0.99, 100, 0.4), &gaps).unwrap_err();
        assert!(err.to_string().contains("ε ∈ (1/2,1)"));
        assert!(ducb_upper_bound(&inputs(1, 0.4, 100, 0.75), &gaps).is_err());
        assert!(ducb_upper_bound(&inputs(1, 1.0, 100, 0.75), &gaps).is_err());
        assert!(swucb_upper_bound(&inputs(1, 0.99, 0, 0.75), &gaps).is_err());
        assert!(swucb_upper_bound(&inputs(1, 0.99, 10, 1.0), &gaps).is_err());
        assert!(
            swucb_upper_bound(&inputs(1, 0.99, 10, 0.75), &GapProfile::uniform(3, 0.1)).is_err()
        );
        assert!(
            swucb_upper_bound(&inputs(1, 0.99, 10, 0.75), &GapProfile::uniform(10, 0.0)).is_err()
        );
    }

    #[test]
    fn swucb_bias_term_is_linear_in_tau() {
        let gaps = GapProfile::uniform(10, 0.1);
        let bias = |tau| {
            swucb_upper_bound(&inputs(4, 0.9, tau, 0.75), &gaps).unwrap()
                - swucb_upper_bound(&inputs(0, 0.9, tau, 0.75), &gaps).unwrap()
        };
        assert_relative_eq!(bias(1000), 10.0 * 4.0 * 1000.0, max_relative = 1e-12);
        assert_relative_eq!(bias(2000), 2.0 * bias(1000), max_relative = 1e-12);
    }

    #[test]
    fn swucb_bound_full_window_is_finite() {
        let gaps = GapProfile::uniform(10, 0.1);
        let b = swucb_upper_bound(&inputs(0, 0.9, 100_000, 0.75), &gaps).unwrap();
        assert!(b.is_finite() && b > 0.0);
        assert!(swucb_upper_bound(&inputs(0, 0.9, 1, 0.75), &gaps)
            .unwrap()
            .is_finite());
    }

    #[test]
    fn swucb_constant_approaches_limit() {
        let far = swucb_item_constant(0.75, 0.1, 1 << 40, 1 << 40);
        let limit = swucb_item_constant_limit(0.75, 0.1);
        // The ceiling of ln(tau)/c keeps a gap of at most 2/ln(tau).
        assert!((far - limit).abs() <= 2.0 / (2f64.powi(40)).ln() + 1e-12);
    }

    #[test]
    fn bounds_monotone_over_grid() {
        for &eps in &[0.55, 0.75, 0.95] {
            for &gap in &[0.05, 0.2] {
                let at = |l: usize, ups: u64, g: f64| {
                    let i = BoundInputs {
                        num_items: l,
                        horizon: 50_000,
                        breakpoints: ups,
                        gamma: 0.995,
                        tau: 700,
                        epsilon: eps,
                    };
                    let gp = GapProfile::uniform(l, g);
                    (
                        ducb_upper_bound(&i, &gp).unwrap(),
                        swucb_upper_bound(&i, &gp).unwrap(),
                    )
                };
                let base = at(8, 4, gap);
                let more_l = at(9, 4, gap);
                let more_u = at(8, 5, gap);
                let wider = at(8, 4, gap * 2.0);
                assert!(more_l.0 > base.0 && more_l.1 > base.1);
                assert!(more_u.0 > base.0 && more_u.1 > base.1);
                assert!(wider.0 < base.0 && wider.1 < base.1);
            }
        }
    }
}
