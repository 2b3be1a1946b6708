use serde::Serialize;

use super::estimator::EstimatorState;
use super::Scheduler;
use crate::model::SlotOutcome;
use crate::rng::SimRng;

/// Optimistic arm index: inflated `PQ` mean over a deflated `P` mean.
///
/// With bonus `b = sqrt(2 ln t / n)` the index is
/// `(pq_hat + b) / (1 - d (1 - max(0, p_hat - b)))`. The numerator is not
/// clipped, so indices above 1 are normal.
pub fn ucb_index(pq_hat: f64, p_hat: f64, n: u64, t: u64, d: f64) -> f64 {
    debug_assert!(n >= 1 && t >= 1);
    let bonus = (2.0 * (t as f64).ln() / n as f64).sqrt();
    let upper_pq = pq_hat + bonus;
    let lower_p = (p_hat - bonus).max(0.0);
    upper_pq / (1.0 - d * (1.0 - lower_p))
}

#[derive(Debug, Clone, Serialize)]
pub struct Ucb {
    d: f64,
    estimator: EstimatorState,
}

impl Ucb {
    pub fn new(num_sources: usize, d: f64) -> Self {
        Self { d, estimator: EstimatorState::new(num_sources) }
    }

    pub fn estimator(&self) -> &EstimatorState {
        &self.estimator
    }
}

impl Scheduler for Ucb {
    fn select(&mut self, t: u64, _rng: &mut SimRng) -> usize {
        let arms = self.estimator.arms();
        if t <= arms.len() as u64 {
            return (t - 1) as usize;
        }
        // Never happens after the initial round, kept for partial replays.
        if let Some(k) = arms.iter().position(|a| a.n_scheduled == 0) {
            return k;
        }
        let d = self.d;
        crate::argmax_lowest(arms.iter().map(|a| ucb_index(a.pq_hat(), a.p_hat(), a.n_scheduled, t, d)))
    }

    fn observe(&mut self, outcome: &SlotOutcome) {
        self.estimator.record(outcome);
    }

    fn observation_count(&self) -> u64 {
        self.estimator.total_updates()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::mu;
    use crate::rng::{stream, StreamRole};
    use approx::assert_relative_eq;

    #[test]
    fn index_worked_example() {
        // b = sqrt(2 ln 1000 / 100) = 0.37169221888498...
        // index = (0.5 + b) / (1 - 0.8 (1 - (0.65 - b))) = 2.0624630424835...
        let v = ucb_index(0.5, 0.65, 100, 1000, 0.8);
        assert_relative_eq!(v, 2.062463042483588, max_relative = 1e-12);
    }

    #[test]
    fn lower_confidence_clamps_at_zero() {
        // t = 1 carries no bonus
        let v = ucb_index(0.2, 0.1, 1, 1, 0.6);
        assert_relative_eq!(v, 0.2 / (1.0 - 0.6 * 0.9), max_relative = 1e-12);
        // p_hat - b < 0: the denominator becomes 1 - d
        let b = (2.0 * 3f64.ln()).sqrt();
        assert!(0.1 - b < 0.0);
        assert_relative_eq!(ucb_index(0.2, 0.1, 1, 3, 0.6), (0.2 + b) / 0.4, max_relative = 1e-12);
    }

    #[test]
    fn bonus_vanishes_for_large_n() {
        let (p, q, d) = (0.65, 0.8, 0.8);
        let v = ucb_index(p * q, p, 1 << 50, 2, d);
        assert_relative_eq!(v, mu(p, q, d), max_relative = 1e-6);
    }

    #[test]
    fn initial_round_then_argmax() {
        let mut ucb = Ucb::new(3, 0.5);
        let mut rng = stream(0, StreamRole::Policy);
        for t in 1..=3 {
            let arm = ucb.select(t, &mut rng);
            assert_eq!(arm, (t - 1) as usize);
            let good = arm == 2;
            ucb.observe(&SlotOutcome {
                arm,
                transmitted: good,
                update: good.then_some(true),
                age_after: 1,
                reward_after: 0.0,
            });
        }
        assert_eq!(ucb.select(4, &mut rng), 2);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let mut ucb = Ucb::new(3, 0.5);
        let mut rng = stream(0, StreamRole::Policy);
        for t in 1..=3 {
            let arm = ucb.select(t, &mut rng);
            ucb.observe(&SlotOutcome { arm, transmitted: false, update: None, age_after: 1, reward_after: 0.0 });
        }
        assert_eq!(ucb.select(4, &mut rng), 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn optimistic_over_exact_moments(p in 0.0f64..=1.0, q in 0.0f64..=1.0, d in 0.01f64..0.99, n in 1u64..100_000, t in 2u64..1_000_000) {
                prop_assert!(ucb_index(p * q, p, n, t, d) > mu(p, q, d));
            }
        }
    }
}
