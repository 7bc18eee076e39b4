//! Experiment harness: datasets, strategies, metrics, oracle and reports.

mod dataset;
mod experiment;
mod oracle;
mod report;
mod strategy;
pub mod synthetic;

pub use dataset::{load_dataset, parse_dataset, write_dataset, DatasetError, QueryRecord};
pub use experiment::{
    embed_queries, random_order, run_experiment, ExperimentRun, ExperimentSettings, HarnessError,
};
pub use oracle::{
    brute_force_plurality, brute_force_stop_index, brute_force_unreachable_index, oracle_check,
    Mismatch, OracleError, Verdict,
};
pub use report::{
    compute_metrics, config_digest, write_audit, AuditRecord, ExperimentReport, Metrics,
    QueryResult, StrategyReport,
};
pub use strategy::Strategy;

use std::sync::Arc;

use crate::agents::{
    simulated_answer_stream, AgentBackend, AgentError, AgentPool, AgentProfile, ReplayAgent,
    SimulatedAgent, TraceRecord, TraceTable,
};
use crate::domain::{AnswerMode, Query};

/// Materializes a simulated trace and wraps it in a replay pool, so every
/// strategy sees identical votes.
pub fn simulated_pool(
    profiles: &[AgentProfile],
    queries: &[Query],
    seed: u64,
    mode: AnswerMode,
) -> Result<(AgentPool, Vec<TraceRecord>), AgentError> {
    let agents = profiles
        .iter()
        .enumerate()
        .map(|(i, p)| {
            SimulatedAgent::new(i, p.clone(), seed, mode).map(SimulatedAgent::without_latency)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let records = simulated_answer_stream(&agents, queries);
    let table = Arc::new(TraceTable::from_records(records.clone())?);
    let pool = replay_pool(
        table,
        profiles.iter().map(|p| p.label.clone()).collect(),
        mode,
    )?;
    Ok((pool, records))
}

/// Replay pool over a trace table, labelled by `labels` when given.
pub fn replay_pool(
    table: Arc<TraceTable>,
    labels: Vec<String>,
    mode: AnswerMode,
) -> Result<AgentPool, AgentError> {
    let backends: Vec<Box<dyn AgentBackend>> = (0..table.agent_count())
        .map(|i| {
            let id = match labels.get(i) {
                Some(label) => crate::domain::AgentId::new(i, label.clone()),
                None => crate::domain::AgentId::anonymous(i),
            };
            Box::new(ReplayAgent::new(id, Arc::clone(&table), mode)) as Box<dyn AgentBackend>
        })
        .collect();
    AgentPool::new(backends)
}
