use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::answer::Answer;
use crate::embedding::EmbeddingVector;

/// Position of an agent in the fixed pool plus a display label.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AgentId {
    pub index: usize,
    pub label: String,
}

impl AgentId {
    pub fn new(index: usize, label: impl Into<String>) -> Self {
        Self {
            index,
            label: label.into(),
        }
    }

    /// Label used when a source carries no names (`agent-0`, `agent-1`, ...).
    pub fn anonymous(index: usize) -> Self {
        Self::new(index, format!("agent-{index}"))
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.label, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub text: String,
    pub gold: Option<Answer>,
    pub topic: Option<String>,
}

/// A single agent's contribution to a session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Vote {
    Answer(Answer),
    /// The backend failed or timed out. Counts as an invocation, supports no answer.
    Abstain,
}

impl Vote {
    pub fn answer(&self) -> Option<&Answer> {
        match self {
            Vote::Answer(a) => Some(a),
            Vote::Abstain => None,
        }
    }

    pub fn is_abstain(&self) -> bool {
        matches!(self, Vote::Abstain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// Some answer collected at least tau votes.
    QuorumReached,
    /// All N agents voted without a quorum; the plurality answer wins.
    PluralityFallback,
    /// Stopped once no answer could still reach tau (pruning enabled only).
    QuorumUnreachable,
    /// A fixed number of agents was invoked with no quorum check.
    FixedBudget,
}

/// Per-agent confidence record: agreement count, participation count and
/// the embeddings of queries on which the agent agreed with the consensus.
#[derive(Debug, Clone, PartialEq)]
pub struct AgentConfidence {
    pub id: AgentId,
    /// Queries where the agent's vote matched the final answer.
    pub agreed: u64,
    /// Queries the agent was invoked on.
    pub participated: u64,
    pub buffer: VecDeque<EmbeddingVector>,
}

impl AgentConfidence {
    pub fn fresh(id: AgentId) -> Self {
        Self {
            id,
            agreed: 0,
            participated: 0,
            buffer: VecDeque::new(),
        }
    }

    /// Appends to the semantic buffer, evicting the oldest entries beyond `capacity`.
    pub fn remember(&mut self, vector: EmbeddingVector, capacity: usize) {
        self.buffer.push_back(vector);
        while self.buffer.len() > capacity {
            self.buffer.pop_front();
        }
    }
}

/// The outcome of one query's vote.
#[derive(Debug, Clone, PartialEq)]
pub struct VoteOutcome {
    pub query_id: String,
    /// `None` only when every invoked agent abstained.
    pub final_answer: Option<Answer>,
    /// Full invocation order the session was run with.
    pub order: Vec<usize>,
    /// Invoked agents with their votes, in invocation order.
    pub votes: Vec<(AgentId, Vote)>,
    pub stop_reason: StopReason,
}

impl VoteOutcome {
    pub fn invoked_count(&self) -> usize {
        self.votes.len()
    }

    pub fn invoked(&self) -> impl Iterator<Item = &AgentId> + '_ {
        self.votes.iter().map(|(id, _)| id)
    }

    /// Number of votes cast for `answer`.
    pub fn support(&self, answer: &Answer) -> usize {
        self.votes
            .iter()
            .filter(|(_, v)| v.answer() == Some(answer))
            .count()
    }

    pub fn agreed_with_final(&self, vote: &Vote) -> bool {
        match (&self.final_answer, vote.answer()) {
            (Some(f), Some(a)) => f == a,
            _ => false,
        }
    }
}
