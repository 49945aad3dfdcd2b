//! Capture-the-flag game engine with reward shaping, scripted attackers and a
//! tabular learner.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`). The
//! aliases at the crate root pin the common `f64` instantiation.

pub mod agents;
pub mod engine;
pub mod env;
pub mod episode_log;
pub mod error;
pub mod geometry;
pub mod learning;
pub mod rewards;
mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Vec2 = geometry::Vec2<f64>;
pub type FieldConfig = engine::FieldConfig<f64>;
pub type GameState = engine::GameState<f64>;
pub type PlayerState = engine::PlayerState<f64>;
pub type GameEvent = engine::GameEvent<f64>;
pub type FeatureVector = engine::FeatureVector<f64>;
pub type Engine = engine::Engine<f64>;
pub type RewardSpec = rewards::RewardSpec<f64>;
pub type PiecewiseLinearPotential = rewards::PiecewiseLinearPotential<f64>;
pub type OpponentSpec = agents::OpponentSpec<f64>;
pub type CtfEnv = env::CtfEnv<f64>;
pub type EpisodeLog = episode_log::EpisodeLog<f64>;
pub type QTable = learning::QTable<f64>;
pub type PolicySnapshot = learning::PolicySnapshot<f64>;
pub type FiniteMdp = learning::FiniteMdp<f64>;

pub type FieldConfig32 = engine::FieldConfig<f32>;
pub type GameState32 = engine::GameState<f32>;
pub type RewardSpec32 = rewards::RewardSpec<f32>;
pub type CtfEnv32 = env::CtfEnv<f32>;
