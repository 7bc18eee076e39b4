//! The global confidence state and its versioned JSON snapshot.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::types::{AgentConfidence, AgentId};
use crate::embedding::EmbeddingVector;

pub const STATE_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_BUFFER_CAPACITY: usize = 128;

#[derive(Debug, Error)]
pub enum StateError {
    #[error("snapshot version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u64, expected: u32 },
    #[error("malformed snapshot: {0}")]
    Malformed(String),
    #[error("agent {agent}: buffer vector has dimension {found}, state dimension is {expected}")]
    DimensionMismatch {
        agent: usize,
        expected: usize,
        found: usize,
    },
    #[error("invalid state: {0}")]
    Invalid(String),
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// Confidence records for every agent in the pool, in pool-index order.
///
/// Only mutated between vote sessions; see [`crate::icu`].
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalState {
    pub agents: Vec<AgentConfidence>,
    pub capacity: usize,
    pub dim: usize,
}

impl GlobalState {
    pub fn fresh(ids: impl IntoIterator<Item = AgentId>, capacity: usize, dim: usize) -> Self {
        Self {
            agents: ids.into_iter().map(AgentConfidence::fresh).collect(),
            capacity,
            dim,
        }
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn total_participation(&self) -> u64 {
        self.agents.iter().map(|a| a.participated).sum()
    }

    pub fn validate(&self) -> Result<(), StateError> {
        if self.capacity == 0 {
            return Err(StateError::Invalid(
                "buffer capacity must be at least 1".into(),
            ));
        }
        for (pos, agent) in self.agents.iter().enumerate() {
            if agent.id.index != pos {
                return Err(StateError::Invalid(format!(
                    "agent at position {pos} has index {}",
                    agent.id.index
                )));
            }
            if agent.agreed > agent.participated {
                return Err(StateError::Invalid(format!(
                    "agent {pos}: c={} exceeds v={}",
                    agent.agreed, agent.participated
                )));
            }
            if agent.buffer.len() > self.capacity {
                return Err(StateError::Invalid(format!(
                    "agent {pos}: buffer holds {} vectors, capacity is {}",
                    agent.buffer.len(),
                    self.capacity
                )));
            }
            if let Some(bad) = agent.buffer.iter().find(|h| h.dim() != self.dim) {
                return Err(StateError::DimensionMismatch {
                    agent: pos,
                    expected: self.dim,
                    found: bad.dim(),
                });
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        let snapshot = Snapshot {
            version: STATE_FORMAT_VERSION,
            capacity: self.capacity,
            dim: self.dim,
            agents: self
                .agents
                .iter()
                .map(|a| SnapshotAgent {
                    index: a.id.index,
                    label: a.id.label.clone(),
                    c: a.agreed,
                    v: a.participated,
                    buffer: a.buffer.iter().map(|h| h.values().to_vec()).collect(),
                })
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&snapshot).expect("snapshot serializes");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, StateError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| StateError::Malformed(e.to_string()))?;
        let version = value
            .get("version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| StateError::Malformed("missing integer `version`".into()))?;
        if version != u64::from(STATE_FORMAT_VERSION) {
            return Err(StateError::VersionMismatch {
                found: version,
                expected: STATE_FORMAT_VERSION,
            });
        }
        let snapshot: Snapshot =
            serde_json::from_value(value).map_err(|e| StateError::Malformed(e.to_string()))?;
        let state = GlobalState {
            capacity: snapshot.capacity,
            dim: snapshot.dim,
            agents: snapshot
                .agents
                .into_iter()
                .map(|a| AgentConfidence {
                    id: AgentId::new(a.index, a.label),
                    agreed: a.c,
                    participated: a.v,
                    buffer: a.buffer.into_iter().map(EmbeddingVector::new).collect(),
                })
                .collect(),
        };
        state.validate()?;
        Ok(state)
    }
}

pub fn save_state(state: &GlobalState, path: &Path) -> Result<(), StateError> {
    state.validate()?;
    fs::write(path, state.to_json()).map_err(|source| StateError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_state(path: &Path) -> Result<GlobalState, StateError> {
    let text = fs::read_to_string(path).map_err(|source| StateError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    GlobalState::from_json(&text)
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Snapshot {
    version: u32,
    capacity: usize,
    dim: usize,
    agents: Vec<SnapshotAgent>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SnapshotAgent {
    index: usize,
    label: String,
    c: u64,
    v: u64,
    buffer: Vec<Vec<f64>>,
}
