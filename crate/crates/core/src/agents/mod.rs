//! Agent backends: seeded simulation, trace replay and a chat-completion client.

mod http;
mod replay;
mod simulated;
mod trace;

use std::io;
use std::path::PathBuf;

use thiserror::Error;

use crate::domain::{AgentId, Query, Vote};

pub use http::{extract_answer, HttpAgent, HttpAgentConfig, DEFAULT_RETRIES, PROMPT_TEMPLATE};
pub use replay::ReplayAgent;
pub use simulated::{
    simulated_answer_stream, AgentProfile, LatencyModel, SimulatedAgent, WrongAnswerModel,
    LATENT_ANSWER,
};
pub use trace::{read_trace, write_trace, TraceRecord, TraceTable};

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("trace line {line}: {message}")]
    TraceFormat { line: usize, message: String },
    #[error("invalid profile for agent {agent}: {message}")]
    InvalidProfile { agent: String, message: String },
    #[error("backend for agent {agent} failed: {message}")]
    Backend { agent: String, message: String },
}

pub trait AgentBackend: Send + Sync {
    fn id(&self) -> &AgentId;

    /// Produces this agent's vote on `query`. Errors are treated as abstentions
    /// by the voting layer.
    fn invoke(&self, query: &Query) -> Result<Vote, AgentError>;
}

/// The fixed, ordered pool of agents for an experiment.
pub struct AgentPool {
    backends: Vec<Box<dyn AgentBackend>>,
}

impl AgentPool {
    /// Backends must be given in pool-index order.
    pub fn new(backends: Vec<Box<dyn AgentBackend>>) -> Result<Self, AgentError> {
        for (pos, b) in backends.iter().enumerate() {
            if b.id().index != pos {
                return Err(AgentError::InvalidProfile {
                    agent: b.id().label.clone(),
                    message: format!("index {} at pool position {pos}", b.id().index),
                });
            }
        }
        Ok(Self { backends })
    }

    pub fn len(&self) -> usize {
        self.backends.len()
    }

    pub fn is_empty(&self) -> bool {
        self.backends.is_empty()
    }

    pub fn ids(&self) -> Vec<AgentId> {
        self.backends.iter().map(|b| b.id().clone()).collect()
    }

    /// Invokes agent `index`, mapping backend failures to [`Vote::Abstain`].
    pub fn invoke(&self, index: usize, query: &Query) -> Vote {
        self.backends[index].invoke(query).unwrap_or(Vote::Abstain)
    }
}

impl std::fmt::Debug for AgentPool {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AgentPool")
            .field("agents", &self.ids())
            .finish()
    }
}
