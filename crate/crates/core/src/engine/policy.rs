use rand::Rng;

use super::qtable::QTable;

/// Epsilon-greedy choice: a uniform random action with probability
/// `epsilon`, the greedy action otherwise.
pub fn select_action<R: Rng + ?Sized>(q: &QTable, s: usize, epsilon: f64, rng: &mut R) -> usize {
    if epsilon > 0.0 && rng.random::<f64>() < epsilon {
        rng.random_range(0..q.actions())
    } else {
        q.argmax(s)
    }
}

/// Exploration rate for `episode` of `total`.
///
/// The first tenth of the run is pure exploration. From there epsilon falls
/// linearly to 0.05 at the last episode.
pub fn epsilon_schedule(episode: u64, total: u64) -> f64 {
    const FLOOR: f64 = 0.05;
    if episode * 10 < total {
        return 1.0;
    }
    let start = total.div_ceil(10);
    let span = total.saturating_sub(1).saturating_sub(start);
    if span == 0 {
        return FLOOR;
    }
    let progress = (episode.min(total - 1) - start) as f64 / span as f64;
    1.0 - (1.0 - FLOOR) * progress
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EpsilonSchedule {
    /// [`epsilon_schedule`].
    Decaying,
    Constant(f64),
}

impl EpsilonSchedule {
    pub fn at(self, episode: u64, total: u64) -> f64 {
        match self {
            EpsilonSchedule::Decaying => epsilon_schedule(episode, total),
            EpsilonSchedule::Constant(e) => e,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{SeedStreams, POLICY};

    #[test]
    fn pure_argmax() {
        let mut q = QTable::new(1, 3);
        q.set(0, 0, 0.1);
        q.set(0, 1, 0.9);
        q.set(0, 2, 0.3);
        let mut rng = SeedStreams::new(0).stream(POLICY);
        assert_eq!(select_action(&q, 0, 0.0, &mut rng), 1);
        assert_eq!(select_action(&QTable::new(1, 3), 0, 0.0, &mut rng), 0);
    }

    #[test]
    fn full_exploration_is_uniform() {
        let q = QTable::new(1, 7);
        let mut rng = SeedStreams::new(11).stream(POLICY);
        let draws = 100_000;
        let mut counts = [0u32; 7];
        for _ in 0..draws {
            counts[select_action(&q, 0, 1.0, &mut rng)] += 1;
        }
        let expected = draws as f64 / 7.0;
        let sigma = libm::sqrt(draws as f64 * (1.0 / 7.0) * (6.0 / 7.0));
        for c in counts {
            assert!((c as f64 - expected).abs() < 3.0 * sigma, "{counts:?}");
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
        // 99.9th percentile of chi-square with 6 degrees of freedom.
        assert!(chi2 < 22.458, "chi2 = {chi2}");
    }

    #[test]
    fn schedule_shape() {
        assert_eq!(epsilon_schedule(0, 10_000), 1.0);
        assert_eq!(epsilon_schedule(999, 10_000), 1.0);
        assert_eq!(epsilon_schedule(1000, 10_000), 1.0);
        assert!((epsilon_schedule(9999, 10_000) - 0.05).abs() < 1e-12);
        let mid = epsilon_schedule(5499, 10_000);
        assert!((mid - (1.0 - 0.95 * 4499.0 / 8999.0)).abs() < 1e-12, "{mid}");
        assert!((mid - 0.5249).abs() < 1e-3);
        let mut prev = 1.0;
        for e in 0..10_000 {
            let eps = epsilon_schedule(e, 10_000);
            assert!(eps <= prev && (0.05..=1.0).contains(&eps));
            prev = eps;
        }
    }

    #[test]
    fn tiny_runs() {
        assert_eq!(epsilon_schedule(0, 1), 1.0);
        assert_eq!(epsilon_schedule(0, 2), 1.0);
        assert_eq!(epsilon_schedule(1, 2), 0.05);
    }
}
