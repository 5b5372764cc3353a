//! QoS class density: active devices of a class per device waiting in its
//! queue. A high density means the queue is short relative to the class.

use crate::error::EngineError;
use crate::fleet::Fleet;
use crate::model::QosClassId;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QosDensity {
    pub class: QosClassId,
    pub alpha: f64,
    /// The queue was empty, so `alpha` holds the active count instead of a ratio.
    pub substituted: bool,
}

/// `O_i / V_i` for one class.
pub fn compute_density(fleet: &Fleet, class: QosClassId) -> Result<QosDensity, EngineError> {
    let waiting = fleet.queued_in(class);
    if waiting == 0 {
        return Err(EngineError::DensityUndefined(class));
    }
    Ok(QosDensity {
        class,
        alpha: fleet.active_in(class) as f64 / waiting as f64,
        substituted: false,
    })
}

/// Like [`compute_density`], but an empty queue yields `alpha = O_i`, flagged.
pub fn density_or_fallback(fleet: &Fleet, class: QosClassId) -> QosDensity {
    compute_density(fleet, class).unwrap_or(QosDensity {
        class,
        alpha: fleet.active_in(class) as f64,
        substituted: true,
    })
}

/// Caches both class densities and refreshes them only when the number of
/// active devices has changed since the last refresh.
#[derive(Debug, Clone, Default)]
pub struct DensityTracker {
    previous_active: Option<u32>,
    cached: Option<[QosDensity; 2]>,
    recomputations: u64,
}

impl DensityTracker {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn recompute_on_change(&mut self, fleet: &Fleet) -> [QosDensity; 2] {
        let m = fleet.active_count();
        match self.cached {
            Some(cached) if self.previous_active == Some(m) => cached,
            _ => {
                let fresh = QosClassId::ALL.map(|c| density_or_fallback(fleet, c));
                self.previous_active = Some(m);
                self.cached = Some(fresh);
                self.recomputations += 1;
                fresh
            }
        }
    }

    /// How many times the densities were actually recomputed.
    pub fn recomputations(&self) -> u64 {
        self.recomputations
    }

    pub fn previous_active(&self) -> Option<u32> {
        self.previous_active
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_scenario, ServiceId};
    use crate::rng::{SeedStreams, CHURN};

    fn fleet(n: u32) -> Fleet {
        Fleet::spawn(&build_scenario(&[ServiceId::WindTurbine], n, 0).unwrap())
    }

    #[test]
    fn six_active_three_waiting() {
        let mut f = fleet(6);
        for id in 0..3 {
            f.enqueue(id);
        }
        let d = compute_density(&f, QosClassId::DelaySensitive).unwrap();
        assert_eq!(d.alpha, 2.0);
    }

    #[test]
    fn everyone_waiting_gives_one() {
        let mut f = fleet(7);
        for id in 0..7 {
            f.enqueue(id);
        }
        assert_eq!(compute_density(&f, QosClassId::DelaySensitive).unwrap().alpha, 1.0);
    }

    #[test]
    fn empty_queue_is_undefined_then_substituted() {
        let f = fleet(5);
        assert_eq!(
            compute_density(&f, QosClassId::DelaySensitive),
            Err(EngineError::DensityUndefined(QosClassId::DelaySensitive))
        );
        let d = density_or_fallback(&f, QosClassId::DelaySensitive);
        assert_eq!((d.alpha, d.substituted), (5.0, true));
    }

    #[test]
    fn tracker_skips_unchanged_active_count() {
        let mut f = fleet(50);
        let mut t = DensityTracker::new();
        t.recompute_on_change(&f);
        t.recompute_on_change(&f);
        assert_eq!(t.recomputations(), 1);
        f.set_active(49, false);
        t.recompute_on_change(&f);
        assert_eq!(t.recomputations(), 2);
        assert_eq!(t.previous_active(), Some(49));
    }

    #[test]
    fn many_churn_events_one_recomputation_per_cycle() {
        let mut f = fleet(150);
        let mut t = DensityTracker::new();
        t.recompute_on_change(&f);
        let mut rng = SeedStreams::new(0).stream(CHURN);
        let toggles = f.churn(&mut rng, 0.07);
        assert!(toggles >= 2);
        t.recompute_on_change(&f);
        t.recompute_on_change(&f);
        assert_eq!(t.recomputations(), 2);
    }
}
