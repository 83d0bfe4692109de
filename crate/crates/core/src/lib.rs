//! Deterministic discrete-event simulator of an energy-aware hierarchical
//! federated-learning smart farm with mechanism-design client selection.

pub mod attacks;
pub mod datagen;
pub mod domain;
pub mod energy;
pub mod engine;
pub mod error;
pub mod flmodel;
pub mod mechanism;
pub mod metrics;
pub mod mobility;
pub mod par;
pub mod rng;

pub use domain::{validate_config, ScenarioConfig};
pub use engine::{run, run_with, sweep, RunResult, SchemeId};
pub use error::{Error, Result};
pub use par::Execution;
