use std::collections::HashMap;
use std::fmt::Write as _;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::strategy::Strategy;
use crate::domain::{Answer, StopReason};
use crate::voting::SessionTraceRecord;

/// Outcome of one query under one strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryResult {
    pub query_id: String,
    pub final_answer: Option<String>,
    /// `None` for unlabeled queries.
    pub correct: Option<bool>,
    pub invoked_count: usize,
    pub stop_reason: StopReason,
    /// Full agent order the strategy used; invoked agents are its prefix.
    pub order: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Over labeled queries only; `None` when nothing is labeled.
    pub accuracy: Option<f64>,
    pub avg_agents: f64,
    pub labeled: usize,
    pub queries: usize,
}

/// Accuracy against `gold` and mean invoked count over all records.
pub fn compute_metrics(records: &[QueryResult], gold: &HashMap<String, Answer>) -> Metrics {
    let mut labeled = 0usize;
    let mut correct = 0usize;
    for r in records {
        if let Some(g) = gold.get(&r.query_id) {
            labeled += 1;
            if r.final_answer.as_deref() == Some(g.canonical.as_str()) {
                correct += 1;
            }
        }
    }
    let invoked: usize = records.iter().map(|r| r.invoked_count).sum();
    Metrics {
        accuracy: (labeled > 0).then(|| correct as f64 / labeled as f64),
        avg_agents: if records.is_empty() {
            0.0
        } else {
            invoked as f64 / records.len() as f64
        },
        labeled,
        queries: records.len(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyReport {
    pub strategy: Strategy,
    #[serde(flatten)]
    pub metrics: Metrics,
    pub per_query: Vec<QueryResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub seed: u64,
    pub pool_size: usize,
    /// SHA-256 of the compact JSON form of `config`.
    pub config_digest: String,
    pub config: serde_json::Value,
    pub strategies: Vec<StrategyReport>,
}

pub fn config_digest(config: &serde_json::Value) -> String {
    let bytes = serde_json::to_vec(config).expect("json value serializes");
    hex::encode(Sha256::digest(&bytes))
}

impl ExperimentReport {
    /// Replaces the embedded configuration and recomputes its digest.
    pub fn set_config(&mut self, config: serde_json::Value) {
        self.config_digest = config_digest(&config);
        self.config = config;
    }

    pub fn strategy(&self, strategy: Strategy) -> Option<&StrategyReport> {
        self.strategies.iter().find(|s| s.strategy == strategy)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    /// Fixed-width comparison table, one row per strategy.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<18} {:>10} {:>12}",
            "strategy", "accuracy", "avg_agents"
        );
        for s in &self.strategies {
            let acc = s
                .metrics
                .accuracy
                .map_or_else(|| "n/a".to_string(), |a| format!("{:.2}", a * 100.0));
            let _ = writeln!(
                out,
                "{:<18} {:>10} {:>12.2}",
                s.strategy.to_string(),
                acc,
                s.metrics.avg_agents
            );
        }
        out
    }

    /// Flat CSV: strategy, accuracy, avg_agents.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("strategy,accuracy,avg_agents\n");
        for s in &self.strategies {
            let acc = s
                .metrics
                .accuracy
                .map_or_else(String::new, |a| format!("{a}"));
            let _ = writeln!(out, "{},{},{}", s.strategy, acc, s.metrics.avg_agents);
        }
        out
    }
}

/// Audit-log line: a session trace record tagged with its strategy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub strategy: Strategy,
    #[serde(flatten)]
    pub record: SessionTraceRecord,
}

pub fn write_audit<W: Write>(mut out: W, records: &[AuditRecord]) -> io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}
