//! Locating the source of an SI diffusion from a single snapshot, with and
//! without a budget of noisy "are you the source?" / "who infected you?"
//! queries.
//!
//! The pipeline is: build a [`graph::Graph`], run [`diffusion::simulate_si`]
//! to get a [`diffusion::Snapshot`], score it with
//! [`centrality::likelihood_table`], then query with
//! [`estimators::run_mvna`] or [`estimators::run_mvad`]. The [`budget`]
//! module evaluates the closed-form budget thresholds and repetition counts,
//! and [`harness`] runs seeded Monte Carlo sweeps.

pub mod budget;
pub mod centrality;
pub mod diffusion;
mod error;
pub mod estimators;
pub mod graph;
pub mod harness;
pub mod respondent;

pub use error::{Error, Result};
