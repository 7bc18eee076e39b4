//! Shared domain types, answer canonicalization and state persistence.

mod answer;
mod state;
mod types;

pub use answer::{canonicalize, canonicalize_answer, Answer, AnswerMode};
pub use state::{
    load_state, save_state, GlobalState, StateError, DEFAULT_BUFFER_CAPACITY, STATE_FORMAT_VERSION,
};
pub use types::{AgentConfidence, AgentId, Query, StopReason, Vote, VoteOutcome};
