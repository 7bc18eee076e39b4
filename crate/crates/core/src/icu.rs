//! Individual confidence updating: the only writer of [`GlobalState`].

use std::collections::HashSet;

use thiserror::Error;

use crate::domain::{GlobalState, VoteOutcome};
use crate::embedding::EmbeddingVector;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum IcuError {
    #[error("query embedding has dimension {found}, state dimension is {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("outcome names agent {0}, which is not in the state")]
    UnknownAgent(usize),
    #[error("confidence update for query `{0}` was already applied")]
    AlreadyApplied(String),
}

/// Updates invoked agents after a session; everyone else is left untouched.
///
/// Each invoked agent gets `v += 1`. Those whose vote matches the final
/// answer also get `c += 1` and the query embedding in their buffer.
/// Abstentions count as participation, never as agreement.
pub fn apply_icu(
    state: &mut GlobalState,
    outcome: &VoteOutcome,
    query_vec: &EmbeddingVector,
) -> Result<(), IcuError> {
    if query_vec.dim() != state.dim {
        return Err(IcuError::DimensionMismatch {
            expected: state.dim,
            found: query_vec.dim(),
        });
    }
    if let Some((id, _)) = outcome.votes.iter().find(|(id, _)| id.index >= state.len()) {
        return Err(IcuError::UnknownAgent(id.index));
    }
    let capacity = state.capacity;
    for (id, vote) in &outcome.votes {
        let phi = &mut state.agents[id.index];
        phi.participated += 1;
        if outcome.agreed_with_final(vote) {
            phi.agreed += 1;
            phi.remember(query_vec.clone(), capacity);
        }
    }
    Ok(())
}

/// Wraps a state and refuses to apply two updates for the same query.
#[derive(Debug, Clone)]
pub struct ConfidenceUpdater {
    state: GlobalState,
    applied: HashSet<String>,
}

impl ConfidenceUpdater {
    pub fn new(state: GlobalState) -> Self {
        Self {
            state,
            applied: HashSet::new(),
        }
    }

    pub fn state(&self) -> &GlobalState {
        &self.state
    }

    pub fn into_state(self) -> GlobalState {
        self.state
    }

    pub fn apply(
        &mut self,
        outcome: &VoteOutcome,
        query_vec: &EmbeddingVector,
    ) -> Result<(), IcuError> {
        if self.applied.contains(&outcome.query_id) {
            return Err(IcuError::AlreadyApplied(outcome.query_id.clone()));
        }
        apply_icu(&mut self.state, outcome, query_vec)?;
        self.applied.insert(outcome.query_id.clone());
        Ok(())
    }
}
