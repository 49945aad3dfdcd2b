//! Experiment front-end: config files, training and evaluation runs, replay
//! checks and heat maps.

pub mod cli;
pub mod config;
pub mod error;
pub mod heatmap;
pub mod replay;
pub mod run;

pub use config::{dump_config, load_config, parse_config, ExperimentConfig, Regime};
pub use error::{Error, Result};
