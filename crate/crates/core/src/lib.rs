//! Robust aggregation of binary forecasts when some experts are adversarial.
//!
//! The crate covers the binary model (closed-form aggregators, worst-case
//! constructions, a minimax solver and a brute-force oracle), a finite
//! general model with sensitivity bounds, and a vote simulation harness.

pub mod cli;
pub mod closed_form;
pub mod error;
pub mod format;
pub mod general;
mod minimax;
pub mod model;
pub mod oracle;
pub mod simulation;
pub mod solver;
pub mod worst_case;

pub use error::{Error, Result};
pub use model::{
    benchmark, expected_loss, induced_conditionals, loss, regret, AdversaryStrategy, Aggregator,
    Benchmark, CondDist, InfoStructure, LossKind, Params,
};
