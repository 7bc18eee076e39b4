//! Independent verifier for engine reports.
//!
//! Recomputes answers and stop indices from the raw trace by brute force,
//! without touching the voting module.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::report::{ExperimentReport, QueryResult};
use super::strategy::Strategy;
use crate::agents::TraceTable;
use crate::domain::{canonicalize, AnswerMode, StopReason};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("strategy {strategy}: report covers {report} queries, trace covers {trace}; first difference `{example}`")]
    QuerySetMismatch {
        strategy: Strategy,
        report: usize,
        trace: usize,
        example: String,
    },
    #[error("report pool size {report} does not match trace pool size {trace}")]
    PoolMismatch { report: usize, trace: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mismatch {
    pub strategy: Strategy,
    pub query_id: String,
    pub field: String,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub checked: usize,
    pub mismatches: Vec<Mismatch>,
    /// Strategies whose final answers could not be recomputed from the trace alone.
    pub answer_checks_skipped: Vec<Strategy>,
}

impl Verdict {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Plurality over `(agent index, answer)` pairs; ties go to the answer whose
/// lowest-indexed supporter is lowest.
pub fn brute_force_plurality(votes: &[(usize, String)]) -> Option<String> {
    let mut best: Option<(&str, usize, usize)> = None;
    for (_, candidate) in votes {
        let supporters: Vec<usize> = votes
            .iter()
            .filter(|(_, a)| a == candidate)
            .map(|(i, _)| *i)
            .collect();
        let count = supporters.len();
        let lowest = *supporters.iter().min().expect("candidate supports itself");
        let better = match best {
            None => true,
            Some((_, c, l)) => count > c || (count == c && lowest < l),
        };
        if better {
            best = Some((candidate, count, lowest));
        }
    }
    best.map(|(a, _, _)| a.to_string())
}

/// Smallest prefix length `n >= tau` at which some answer holds `tau` votes,
/// or `None` if no prefix of `answers` ever reaches a quorum.
pub fn brute_force_stop_index(answers: &[Option<String>], tau: usize) -> Option<usize> {
    (tau..=answers.len()).find(|&n| prefix_max(&answers[..n]) >= tau)
}

/// Smallest prefix length after which no answer can reach `tau` even if every
/// remaining agent agreed with the current leader.
pub fn brute_force_unreachable_index(answers: &[Option<String>], tau: usize) -> Option<usize> {
    (1..answers.len()).find(|&n| prefix_max(&answers[..n]) + (answers.len() - n) < tau)
}

fn prefix_max(prefix: &[Option<String>]) -> usize {
    prefix
        .iter()
        .flatten()
        .map(|candidate| prefix.iter().flatten().filter(|a| *a == candidate).count())
        .max()
        .unwrap_or(0)
}

fn trace_answer(trace: &TraceTable, query: &str, agent: usize, mode: AnswerMode) -> Option<String> {
    trace.get(query, agent).map(|raw| canonicalize(raw, mode))
}

pub fn oracle_check(
    trace: &TraceTable,
    report: &ExperimentReport,
    mode: AnswerMode,
) -> Result<Verdict, OracleError> {
    let n = report.pool_size;
    if trace.agent_count() != n {
        return Err(OracleError::PoolMismatch {
            report: n,
            trace: trace.agent_count(),
        });
    }
    let tau = n / 2 + 1;
    let pruned = report
        .config
        .get("prune_impossible")
        .and_then(serde_json::Value::as_bool)
        .unwrap_or(false);
    let mut verdict = Verdict::default();

    for s in &report.strategies {
        let reported: BTreeSet<String> = s.per_query.iter().map(|r| r.query_id.clone()).collect();
        if &reported != trace.query_ids() {
            let example = reported
                .symmetric_difference(trace.query_ids())
                .next()
                .cloned()
                .unwrap_or_default();
            return Err(OracleError::QuerySetMismatch {
                strategy: s.strategy,
                report: reported.len(),
                trace: trace.query_ids().len(),
                example,
            });
        }
        if s.strategy == Strategy::WeightedMV {
            verdict.answer_checks_skipped.push(s.strategy);
        }
        for r in &s.per_query {
            verdict.checked += 1;
            check_query(
                trace,
                s.strategy,
                r,
                (n, tau),
                pruned,
                mode,
                &mut verdict.mismatches,
            );
        }
    }
    Ok(verdict)
}

fn check_query(
    trace: &TraceTable,
    strategy: Strategy,
    r: &QueryResult,
    (n, tau): (usize, usize),
    pruned: bool,
    mode: AnswerMode,
    out: &mut Vec<Mismatch>,
) {
    let mut flag = |field: &str, expected: String, found: String| {
        if expected != found {
            out.push(Mismatch {
                strategy,
                query_id: r.query_id.clone(),
                field: field.to_string(),
                expected,
                found,
            });
        }
    };
    let show = |a: &Option<String>| a.clone().unwrap_or_else(|| "<none>".into());

    let mut sorted = r.order.clone();
    sorted.sort_unstable();
    if sorted != (0..n).collect::<Vec<_>>() {
        flag(
            "order",
            format!("permutation of 0..{n}"),
            format!("{:?}", r.order),
        );
        return;
    }

    let full: Vec<(usize, String)> = (0..n)
        .filter_map(|i| Some((i, trace_answer(trace, &r.query_id, i, mode)?)))
        .collect();

    match strategy {
        Strategy::SimpleMV => {
            flag(
                "final_answer",
                show(&brute_force_plurality(&full)),
                show(&r.final_answer),
            );
            flag("invoked_count", n.to_string(), r.invoked_count.to_string());
        }
        Strategy::WeightedMV => {
            flag("invoked_count", n.to_string(), r.invoked_count.to_string());
        }
        Strategy::FixedRandomK(k) | Strategy::FixedTopK(k) => {
            flag("invoked_count", k.to_string(), r.invoked_count.to_string());
            let take = r.invoked_count.min(n);
            let subset: Vec<(usize, String)> = r.order[..take]
                .iter()
                .filter_map(|&i| Some((i, trace_answer(trace, &r.query_id, i, mode)?)))
                .collect();
            flag(
                "final_answer",
                show(&brute_force_plurality(&subset)),
                show(&r.final_answer),
            );
        }
        Strategy::RandomES | Strategy::EmsRel | Strategy::EmsSim => {
            let ranked: Vec<Option<String>> = r
                .order
                .iter()
                .map(|&i| trace_answer(trace, &r.query_id, i, mode))
                .collect();
            let quorum = brute_force_stop_index(&ranked, tau);
            let unreachable = if pruned {
                brute_force_unreachable_index(&ranked, tau)
                    .filter(|&u| quorum.is_none_or(|q| u < q))
            } else {
                None
            };
            let (stop, reason) = match (quorum, unreachable) {
                (_, Some(u)) => (u, StopReason::QuorumUnreachable),
                (Some(q), None) => (q, StopReason::QuorumReached),
                (None, None) => (n, StopReason::PluralityFallback),
            };
            let expected_answer = if unreachable.is_some() {
                let prefix: Vec<(usize, String)> = r.order[..stop]
                    .iter()
                    .filter_map(|&i| Some((i, trace_answer(trace, &r.query_id, i, mode)?)))
                    .collect();
                brute_force_plurality(&prefix)
            } else {
                brute_force_plurality(&full)
            };
            flag(
                "final_answer",
                show(&expected_answer),
                show(&r.final_answer),
            );
            flag(
                "invoked_count",
                stop.to_string(),
                r.invoked_count.to_string(),
            );
            flag(
                "stop_reason",
                format!("{reason:?}"),
                format!("{:?}", r.stop_reason),
            );
        }
    }

    if let Some(answer) = &r.final_answer {
        // The reported answer must at least appear among the invoked votes.
        let invoked: BTreeMap<usize, ()> = r.order[..r.invoked_count.min(n)]
            .iter()
            .map(|&i| (i, ()))
            .collect();
        let present = full
            .iter()
            .any(|(i, a)| invoked.contains_key(i) && a == answer);
        flag(
            "answer_support",
            "present".into(),
            if present { "present" } else { "absent" }.into(),
        );
    }
}
