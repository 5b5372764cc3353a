//! The training loop: epsilon-greedy Q-learning over decision steps, one
//! step per episode, ending with the greedy action of every state published
//! to the candidate store.

use alloc::vec::Vec;

use super::datastore::CandidateStore;
use super::env::Environment;
use super::mdp::{Action, NetworkState};
use super::policy::{select_action, EpsilonSchedule};
use super::qtable::{bellman_update, QTable};
use crate::error::{ContractViolation, EngineError};
use crate::rng::{SeedStreams, POLICY};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingConfig {
    pub episodes: u64,
    pub lr: f64,
    pub gamma: f64,
    pub seed: u64,
    pub epsilon: EpsilonSchedule,
}

impl TrainingConfig {
    pub fn new(episodes: u64, lr: f64, gamma: f64, seed: u64) -> Self {
        TrainingConfig {
            episodes,
            lr,
            gamma,
            seed,
            epsilon: EpsilonSchedule::Decaying,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingOutcome {
    pub qtable: QTable,
    /// Reward collected in each episode.
    pub episode_rewards: Vec<f64>,
    /// Running sum of `episode_rewards`.
    pub reward_trace: Vec<f64>,
    pub epsilons: Vec<f64>,
    pub candidate: CandidateStore,
}

pub fn run_training<E: Environment + ?Sized>(env: &mut E, cfg: &TrainingConfig) -> Result<TrainingOutcome, EngineError> {
    if cfg.episodes == 0 {
        return Err(ContractViolation("training needs at least one episode").into());
    }
    let services = env.num_services();
    let mut q = QTable::new(NetworkState::count(services), Action::count(services));
    let mut rng = SeedStreams::new(cfg.seed).stream(POLICY);
    let n = cfg.episodes as usize;
    let mut episode_rewards = Vec::with_capacity(n);
    let mut reward_trace = Vec::with_capacity(n);
    let mut epsilons = Vec::with_capacity(n);
    let mut total = 0.0;

    let mut s = env.state();
    let mut eps = cfg.epsilon.at(0, cfg.episodes);
    let mut a = select_action(&q, s.index(), eps, &mut rng);
    for episode in 0..cfg.episodes {
        let outcome = env.step(Action::from_index(a, services));
        let s_next = outcome.next;
        bellman_update(&mut q, s.index(), a, outcome.reward, s_next.index(), cfg.lr, cfg.gamma)?;
        total += outcome.reward;
        episode_rewards.push(outcome.reward);
        reward_trace.push(total);
        epsilons.push(eps);
        eps = cfg.epsilon.at(episode + 1, cfg.episodes);
        a = select_action(&q, s_next.index(), eps, &mut rng);
        s = s_next;
    }

    let mut candidate = CandidateStore::new();
    for index in 0..q.states() {
        let state = NetworkState::from_index(index, services);
        candidate.publish(state, Action::from_index(q.argmax(index), services), cfg.episodes);
    }
    Ok(TrainingOutcome {
        qtable: q,
        episode_rewards,
        reward_trace,
        epsilons,
        candidate,
    })
}

pub fn recommend(candidate: &CandidateStore, state: NetworkState) -> Result<Action, EngineError> {
    candidate.recommend(state)
}
