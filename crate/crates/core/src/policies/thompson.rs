use rand_distr::{Beta, Distribution};
use serde::Serialize;

use super::Scheduler;
use crate::model::SlotOutcome;
use crate::rng::SimRng;

/// Beta posterior counts for one source.
///
/// A failed transmission counts as a failure of both the `P` and the `PQ`
/// process.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TsArm {
    pub s_pq: u64,
    pub f_pq: u64,
    pub s_p: u64,
    pub f_p: u64,
}

impl TsArm {
    pub fn record(&mut self, outcome: &SlotOutcome) {
        if !outcome.transmitted {
            self.f_pq += 1;
            self.f_p += 1;
            return;
        }
        self.s_p += 1;
        if outcome.update == Some(true) {
            self.s_pq += 1;
        } else {
            self.f_pq += 1;
        }
    }

    pub fn times_scheduled(&self) -> u64 {
        self.s_p + self.f_p
    }
}

pub fn ts_index(x: f64, y: f64, d: f64) -> f64 {
    x / (1.0 - d * (1.0 - y))
}

fn beta_draw(successes: u64, failures: u64, rng: &mut SimRng) -> f64 {
    Beta::new(successes as f64 + 1.0, failures as f64 + 1.0).expect("beta parameters are at least 1").sample(rng)
}

#[derive(Debug, Clone, Serialize)]
pub struct ThompsonSampling {
    d: f64,
    arms: Vec<TsArm>,
}

impl ThompsonSampling {
    pub fn new(num_sources: usize, d: f64) -> Self {
        Self { d, arms: vec![TsArm::default(); num_sources] }
    }

    pub fn from_counts(arms: Vec<TsArm>, d: f64) -> Self {
        Self { d, arms }
    }

    pub fn arms(&self) -> &[TsArm] {
        &self.arms
    }
}

impl Scheduler for ThompsonSampling {
    /// For each source in order draws `x ~ Beta(s_pq+1, f_pq+1)` then
    /// `y ~ Beta(s_p+1, f_p+1)`, and returns the argmax of `x / (1 - d (1 - y))`.
    fn select(&mut self, _t: u64, rng: &mut SimRng) -> usize {
        let d = self.d;
        crate::argmax_lowest(self.arms.iter().map(|a| {
            let x = beta_draw(a.s_pq, a.f_pq, rng);
            let y = beta_draw(a.s_p, a.f_p, rng);
            ts_index(x, y, d)
        }))
    }

    fn observe(&mut self, outcome: &SlotOutcome) {
        self.arms[outcome.arm].record(outcome);
    }

    fn observation_count(&self) -> u64 {
        self.arms.iter().map(TsArm::times_scheduled).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, StreamRole};

    fn out(transmitted: bool, update: Option<bool>) -> SlotOutcome {
        SlotOutcome { arm: 0, transmitted, update, age_after: 1, reward_after: 0.0 }
    }

    fn deltas(o: SlotOutcome) -> (u64, u64, u64, u64) {
        let mut a = TsArm::default();
        a.record(&o);
        (a.s_pq, a.f_pq, a.s_p, a.f_p)
    }

    #[test]
    fn observe_branches() {
        assert_eq!(deltas(out(false, None)), (0, 1, 0, 1));
        assert_eq!(deltas(out(true, Some(true))), (1, 0, 1, 0));
        assert_eq!(deltas(out(true, Some(false))), (0, 1, 1, 0));
    }

    #[test]
    fn perfect_draw_index_is_one() {
        assert_eq!(ts_index(1.0, 1.0, 0.8), 1.0);
    }

    #[test]
    fn fresh_posteriors_are_symmetric() {
        let k = 4;
        let n = 100_000u32;
        let mut ts = ThompsonSampling::new(k, 0.8);
        let mut rng = stream(17, StreamRole::Policy);
        let mut counts = vec![0u32; k];
        for t in 1..=n {
            counts[ts.select(t as u64, &mut rng)] += 1;
        }
        let expected = n as f64 / k as f64;
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // chi-square, 3 degrees of freedom, 0.1% critical value
        assert!(chi2 < 16.27, "chi2 = {chi2}, counts {counts:?}");
    }

    #[test]
    fn concentrated_posterior_wins() {
        // sampled indices can exceed 1, so the rivals need posteriors of their own
        let mut arms = vec![TsArm { s_pq: 200, f_pq: 800, s_p: 500, f_p: 500 }; 4];
        arms[2] = TsArm { s_pq: 1_000_000, f_pq: 0, s_p: 1_000_000, f_p: 0 };
        let mut ts = ThompsonSampling::from_counts(arms, 0.8);
        let mut rng = stream(5, StreamRole::Policy);
        let hits = (1..=10_000).filter(|&t| ts.select(t, &mut rng) == 2).count();
        assert!(hits as f64 / 10_000.0 > 0.99, "{hits}");
    }
}
