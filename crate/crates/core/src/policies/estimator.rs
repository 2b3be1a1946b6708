use serde::Serialize;

use crate::model::SlotOutcome;

/// `pq_hat / (1 - d (1 - p_hat))`, the plug-in estimate of arm quality.
pub fn empirical_mu(pq_hat: f64, p_hat: f64, d: f64) -> f64 {
    pq_hat / (1.0 - d * (1.0 - p_hat))
}

/// Per-source counts of the `P` (delivered) and `PQ` (delivered and
/// accurate) indicator processes.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ArmCounts {
    pub pq_successes: u64,
    pub p_successes: u64,
    pub n_scheduled: u64,
}

impl ArmCounts {
    pub fn pq_hat(&self) -> f64 {
        if self.n_scheduled == 0 {
            0.0
        } else {
            self.pq_successes as f64 / self.n_scheduled as f64
        }
    }

    pub fn p_hat(&self) -> f64 {
        if self.n_scheduled == 0 {
            0.0
        } else {
            self.p_successes as f64 / self.n_scheduled as f64
        }
    }

    pub fn mu_hat(&self, d: f64) -> f64 {
        empirical_mu(self.pq_hat(), self.p_hat(), d)
    }
}

/// Sufficient statistics shared by ETC, epsilon-greedy and UCB.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct EstimatorState {
    arms: Vec<ArmCounts>,
}

impl EstimatorState {
    pub fn new(num_sources: usize) -> Self {
        Self { arms: vec![ArmCounts::default(); num_sources] }
    }

    pub fn record(&mut self, outcome: &SlotOutcome) {
        let arm = &mut self.arms[outcome.arm];
        arm.n_scheduled += 1;
        if outcome.transmitted {
            arm.p_successes += 1;
            if outcome.update == Some(true) {
                arm.pq_successes += 1;
            }
        }
    }

    pub fn arms(&self) -> &[ArmCounts] {
        &self.arms
    }

    pub fn arm(&self, k: usize) -> &ArmCounts {
        &self.arms[k]
    }

    pub fn total_updates(&self) -> u64 {
        self.arms.iter().map(|a| a.n_scheduled).sum()
    }

    pub fn mu_hats(&self, d: f64) -> impl Iterator<Item = f64> + '_ {
        self.arms.iter().map(move |a| a.mu_hat(d))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn outcome(transmitted: bool, update: Option<bool>) -> SlotOutcome {
        SlotOutcome { arm: 0, transmitted, update, age_after: 1, reward_after: 0.0 }
    }

    #[test]
    fn empirical_mu_examples() {
        assert_eq!(empirical_mu(0.0, 0.0, 0.8), 0.0);
        assert_relative_eq!(empirical_mu(0.52, 0.65, 0.8), crate::oracle::mu(0.65, 0.8, 0.8), max_relative = 1e-15);
        assert_relative_eq!(empirical_mu(0.52, 0.65, 0.8), 0.72222, epsilon = 1e-5);
        assert_eq!(empirical_mu(1.0, 1.0, 0.3), 1.0);
    }

    #[test]
    fn record_branches() {
        let mut est = EstimatorState::new(1);
        est.record(&outcome(false, None));
        assert_eq!(*est.arm(0), ArmCounts { pq_successes: 0, p_successes: 0, n_scheduled: 1 });
        est.record(&outcome(true, Some(true)));
        assert_eq!(*est.arm(0), ArmCounts { pq_successes: 1, p_successes: 1, n_scheduled: 2 });
        est.record(&outcome(true, Some(false)));
        assert_eq!(*est.arm(0), ArmCounts { pq_successes: 1, p_successes: 2, n_scheduled: 3 });
    }

    #[test]
    fn estimates_concentrate() {
        use crate::model::{simulate_slot, Depreciation, MonitorState, SourceParams};
        use crate::rng::{stream, StreamRole};
        let n = 10_000u64;
        let (p, q) = (0.65, 0.8);
        let src = SourceParams::new(p, q).unwrap();
        let d = Depreciation::new(0.8).unwrap();
        let mut rng = stream(5, StreamRole::Environment);
        let mut est = EstimatorState::new(1);
        let mut state = MonitorState::initial();
        for _ in 0..n {
            let (o, s) = simulate_slot(&state, 0, &src, d, &mut rng);
            est.record(&o);
            state = s;
        }
        let tol = 4.0 * ((n as f64).ln() / n as f64).sqrt();
        assert!((est.arm(0).p_hat() - p).abs() <= tol);
        assert!((est.arm(0).pq_hat() - p * q).abs() <= tol);
    }
}
