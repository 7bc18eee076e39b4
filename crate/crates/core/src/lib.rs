//! Reliability-ordered majority voting with quorum early stopping.
//!
//! Agents are ranked per query by how reliable they have been ([`confidence`]),
//! invoked in that order until one answer holds an absolute majority of the
//! pool ([`voting`]), and credited afterwards ([`icu`]). The final answer is
//! always the one full-pool majority voting would have produced; only the
//! number of invoked agents changes.
//!
//! [`harness`] runs this protocol next to the usual baselines on simulated,
//! replayed or live agents and verifies the results with a brute-force oracle.

pub mod agents;
pub mod confidence;
pub mod domain;
pub mod embedding;
pub mod harness;
pub mod icu;
pub mod voting;

pub use domain::{Answer, AnswerMode, GlobalState, Query, StopReason, Vote, VoteOutcome};
