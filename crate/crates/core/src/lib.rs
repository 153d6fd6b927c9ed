//! Online learning to rank under the cascade click model when attraction
//! probabilities change over time.
//!
//! The crate provides the click model ([`model`]), piecewise-stationary
//! environments ([`environment`]), ranking policies ([`policies`]), closed-form
//! regret bounds ([`bounds`]) and a deterministic parallel experiment harness
//! ([`harness`]).

pub mod bounds;
pub mod cli;
pub mod config;
pub mod environment;
pub mod error;
pub mod format;
pub mod harness;
pub mod model;
pub mod policies;

pub use config::{BaseSource, EnvironmentSpec, ExperimentConfig};
pub use environment::{AttractionSchedule, PerturbationSpec, StartPhase};
pub use error::{Error, Result};
pub use harness::{run_experiment, run_single, AggregateResult, RunTrace};
pub use model::{AttractionVector, ClickOutcome, ItemId, RankedList};
pub use policies::{PolicySpec, RankingPolicy};
