use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::mdp::{Action, NetworkState};
use crate::error::EngineError;

/// Time-indexed log that keeps only the records of the last `window_ms`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunningDatastore<T> {
    window_ms: f64,
    entries: VecDeque<(f64, T)>,
}

impl<T> RunningDatastore<T> {
    pub fn new(window_seconds: u64) -> Self {
        RunningDatastore {
            window_ms: window_seconds as f64 * 1000.0,
            entries: VecDeque::new(),
        }
    }

    /// Appends a record stamped `t_ms` and evicts everything older than
    /// `t_ms − window`.
    pub fn push(&mut self, t_ms: f64, record: T) {
        self.entries.push_back((t_ms, record));
        self.evict(t_ms);
    }

    pub fn evict(&mut self, now_ms: f64) {
        let oldest = now_ms - self.window_ms;
        while self.entries.front().is_some_and(|(t, _)| *t < oldest) {
            self.entries.pop_front();
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &(f64, T)> {
        self.entries.iter()
    }

    pub fn latest(&self) -> Option<&T> {
        self.entries.back().map(|(_, r)| r)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn oldest_ms(&self) -> Option<f64> {
        self.entries.front().map(|(t, _)| *t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CandidateEntry {
    pub state: NetworkState,
    pub action: Action,
    /// Training episode after which the action was published.
    pub episode: u64,
}

/// Recommended action per state, as published by training.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CandidateStore {
    entries: Vec<CandidateEntry>,
}

impl CandidateStore {
    pub fn new() -> Self {
        Self::default()
    }

    /// Replaces the recommendation for `state`.
    pub(crate) fn publish(&mut self, state: NetworkState, action: Action, episode: u64) {
        self.entries.retain(|e| e.state != state);
        self.entries.push(CandidateEntry { state, action, episode });
    }

    pub fn entries(&self) -> &[CandidateEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn recommend(&self, state: NetworkState) -> Result<Action, EngineError> {
        if self.entries.is_empty() {
            return Err(EngineError::NotTrained);
        }
        self.entries
            .iter()
            .find(|e| e.state == state)
            .map(|e| e.action)
            .ok_or(EngineError::NotTrained)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn running_window_evicts_old_records() {
        let mut ds = RunningDatastore::new(60);
        for cycle in 0..2000u64 {
            let t = cycle as f64 * 100.0;
            ds.push(t, cycle);
            assert!(ds.oldest_ms().unwrap() >= t - 60_000.0);
        }
        assert_eq!(ds.len(), 601);
        assert_eq!(ds.latest(), Some(&1999));
    }

    #[test]
    fn empty_candidate_store_is_not_trained() {
        let store = CandidateStore::new();
        assert_eq!(store.recommend(NetworkState::all_sensitive(2)), Err(EngineError::NotTrained));
    }

    #[test]
    fn publish_replaces() {
        let mut store = CandidateStore::new();
        let s = NetworkState::all_sensitive(2);
        store.publish(s, Action::NoOp, 1);
        store.publish(s, Action::from_index(3, 2), 2);
        assert_eq!(store.entries().len(), 1);
        assert_eq!(store.recommend(s), Ok(Action::from_index(3, 2)));
    }
}
