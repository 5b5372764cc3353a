//! The management layer: QoS class density, the service-to-class assignment
//! MDP, tabular Q-learning and the datastores that hold its inputs and
//! recommendations.

pub mod datastore;
pub mod density;
pub mod env;
pub mod mdp;
pub mod policy;
pub mod qtable;
pub mod reward;
pub mod train;

pub use datastore::{CandidateEntry, CandidateStore, RunningDatastore};
pub use density::{compute_density, density_or_fallback, DensityTracker, QosDensity};
pub use env::{Environment, FleetEnvironment, StepOutcome};
pub use mdp::{Action, NetworkState};
pub use policy::{epsilon_schedule, select_action, EpsilonSchedule};
pub use qtable::{bellman_update, QTable};
pub use reward::{reward, RewardWeights, ServiceObservation, StepSnapshot};
pub use train::{recommend, run_training, TrainingConfig, TrainingOutcome};
