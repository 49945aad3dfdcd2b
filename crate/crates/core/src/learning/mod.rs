//! Tabular Q-learning defender: state discretization, training regimes,
//! greedy evaluation, and a value-iteration oracle.

mod curve;
mod discretize;
mod mdp;
mod qtable;
mod snapshot;
mod train;

pub use curve::{plateau_episode, series, CurvePoint};
pub use discretize::DiscretizerConfig;
pub use mdp::{value_iteration, FiniteMdp, ValueIterationResult};
pub use qtable::{argmax, q_update, select_action, QTable};
pub use snapshot::{PolicySnapshot, SnapshotMeta, SNAPSHOT_FORMAT, SNAPSHOT_VERSION};
pub use train::{
    baseline_score, derive_seed, evaluate, opponent_draws, run_curriculum, run_interleaved, train,
    CurriculumStage, EpsilonSchedule, EvalReport, LearningSetup, TrainConfig, TrainOutput,
};
