use std::sync::Arc;

use super::{AgentBackend, AgentError, TraceTable};
use crate::domain::{AgentId, Answer, AnswerMode, Query, Vote};

/// Answers from a pre-recorded trace; abstains where the trace has no record.
#[derive(Debug, Clone)]
pub struct ReplayAgent {
    id: AgentId,
    table: Arc<TraceTable>,
    mode: AnswerMode,
}

impl ReplayAgent {
    pub fn new(id: AgentId, table: Arc<TraceTable>, mode: AnswerMode) -> Self {
        Self { id, table, mode }
    }

    /// One replay agent per pool index found in the trace.
    pub fn pool_from(table: Arc<TraceTable>, mode: AnswerMode) -> Vec<ReplayAgent> {
        (0..table.agent_count())
            .map(|i| ReplayAgent::new(AgentId::anonymous(i), Arc::clone(&table), mode))
            .collect()
    }
}

impl AgentBackend for ReplayAgent {
    fn id(&self) -> &AgentId {
        &self.id
    }

    fn invoke(&self, query: &Query) -> Result<Vote, AgentError> {
        Ok(match self.table.get(&query.id, self.id.index) {
            Some(raw) => Vote::Answer(Answer::new(raw, self.mode)),
            None => Vote::Abstain,
        })
    }
}
