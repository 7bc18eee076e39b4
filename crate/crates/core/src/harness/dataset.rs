use std::collections::HashSet;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{Answer, AnswerMode, Query};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("i/o error on {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate query id `{id}`")]
    DuplicateId { line: usize, id: String },
}

/// Wire form of one dataset line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gold: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic: Option<String>,
}

impl From<&Query> for QueryRecord {
    fn from(q: &Query) -> Self {
        Self {
            id: q.id.clone(),
            text: q.text.clone(),
            gold: q.gold.as_ref().map(|g| g.raw.clone()),
            topic: q.topic.clone(),
        }
    }
}

pub fn parse_dataset<R: BufRead>(reader: R, mode: AnswerMode) -> Result<Vec<Query>, DatasetError> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| DatasetError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: QueryRecord = serde_json::from_str(&line).map_err(|e| DatasetError::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        if record.id.is_empty() {
            return Err(DatasetError::Parse {
                line: line_no,
                message: "empty query id".into(),
            });
        }
        if record.text.trim().is_empty() {
            return Err(DatasetError::Parse {
                line: line_no,
                message: format!("query `{}` has empty text", record.id),
            });
        }
        if !seen.insert(record.id.clone()) {
            return Err(DatasetError::DuplicateId {
                line: line_no,
                id: record.id,
            });
        }
        out.push(Query {
            id: record.id,
            text: record.text,
            gold: record.gold.map(|g| Answer::new(g, mode)),
            topic: record.topic,
        });
    }
    Ok(out)
}

pub fn load_dataset(path: &Path, mode: AnswerMode) -> Result<Vec<Query>, DatasetError> {
    let file = File::open(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(BufReader::new(file), mode)
}

pub fn write_dataset<W: Write>(mut out: W, queries: &[Query]) -> io::Result<()> {
    for q in queries {
        serde_json::to_writer(&mut out, &QueryRecord::from(q))?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
