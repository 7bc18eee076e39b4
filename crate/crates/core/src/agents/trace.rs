use std::collections::{BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AgentError;

/// One materialized agent answer, one JSON object per line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub query_id: String,
    pub agent_id: usize,
    pub answer: String,
}

pub fn write_trace<W: Write>(mut out: W, records: &[TraceRecord]) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRecord>, AgentError> {
    let io_err = |source| AgentError::Io {
        path: path.to_path_buf(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut records = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err)?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| AgentError::TraceFormat {
            line: i + 1,
            message: e.to_string(),
        })?;
        records.push(record);
    }
    Ok(records)
}

/// Lookup table over a trace: at most one answer per (query, agent).
#[derive(Debug, Clone, Default)]
pub struct TraceTable {
    answers: HashMap<(String, usize), String>,
    agents: usize,
    queries: BTreeSet<String>,
}

impl TraceTable {
    pub fn from_records(
        records: impl IntoIterator<Item = TraceRecord>,
    ) -> Result<Self, AgentError> {
        let mut table = TraceTable::default();
        for (i, r) in records.into_iter().enumerate() {
            table.agents = table.agents.max(r.agent_id + 1);
            table.queries.insert(r.query_id.clone());
            let key = (r.query_id, r.agent_id);
            if table.answers.contains_key(&key) {
                return Err(AgentError::TraceFormat {
                    line: i + 1,
                    message: format!("duplicate record for query {} agent {}", key.0, key.1),
                });
            }
            table.answers.insert(key, r.answer);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self, AgentError> {
        Self::from_records(read_trace(path)?)
    }

    /// Widens the table to `agents` agents and registers `queries`, for pools
    /// whose trailing agents or whole queries produced no records.
    pub fn with_pool(mut self, agents: usize, queries: impl IntoIterator<Item = String>) -> Self {
        self.agents = self.agents.max(agents);
        self.queries.extend(queries);
        self
    }

    /// Pool size implied by the highest agent index.
    pub fn agent_count(&self) -> usize {
        self.agents
    }

    pub fn query_ids(&self) -> &BTreeSet<String> {
        &self.queries
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }

    pub fn get(&self, query_id: &str, agent: usize) -> Option<&str> {
        self.answers
            .get(&(query_id.to_string(), agent))
            .map(String::as_str)
    }
}
