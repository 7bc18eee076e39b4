//! Runs every configured strategy over one dataset and one agent pool.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::report::{
    compute_metrics, config_digest, AuditRecord, ExperimentReport, QueryResult, StrategyReport,
};
use super::strategy::Strategy;
use crate::agents::AgentPool;
use crate::confidence::{historical_reliability, rank_agents, ScoringConfig, ScoringStrategy};
use crate::domain::{Answer, AnswerMode, GlobalState, Query, StateError, StopReason, VoteOutcome};
use crate::embedding::{EmbeddingError, EmbeddingProvider, EmbeddingVector};
use crate::icu::{ConfidenceUpdater, IcuError};
use crate::voting::{run_fixed_budget, run_session, trace_records, DispatchConfig, VoteError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("query `{query}`")]
    Embedding {
        query: String,
        #[source]
        source: EmbeddingError,
    },
    #[error("query `{query}`")]
    Vote {
        query: String,
        #[source]
        source: VoteError,
    },
    #[error("query `{query}`")]
    Icu {
        query: String,
        #[source]
        source: IcuError,
    },
    #[error(transparent)]
    State(#[from] StateError),
}

/// Everything that affects results, embedded in the report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSettings {
    pub seed: u64,
    pub strategies: Vec<Strategy>,
    pub scoring: ScoringConfig,
    pub answer_mode: AnswerMode,
    pub buffer_capacity: usize,
    pub prune_impossible: bool,
    /// Worker threads; 1 is fully sequential. Never affects results.
    #[serde(skip)]
    pub parallel: usize,
}

impl Default for ExperimentSettings {
    fn default() -> Self {
        Self {
            seed: 0,
            strategies: Strategy::ALL_DEFAULT.to_vec(),
            scoring: ScoringConfig::default(),
            answer_mode: AnswerMode::Text,
            buffer_capacity: crate::domain::DEFAULT_BUFFER_CAPACITY,
            prune_impossible: false,
            parallel: 1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub audit: Vec<AuditRecord>,
    /// Final confidence state of every state-updating strategy.
    pub final_states: Vec<(Strategy, GlobalState)>,
}

impl ExperimentRun {
    pub fn final_state(&self, strategy: Strategy) -> Option<&GlobalState> {
        self.final_states
            .iter()
            .find(|(s, _)| *s == strategy)
            .map(|(_, st)| st)
    }
}

struct StrategyRun {
    report: StrategyReport,
    audit: Vec<AuditRecord>,
    final_state: Option<GlobalState>,
}

/// Seeded per-query shuffle of `0..n`, independent of query order.
pub fn random_order(seed: u64, salt: &str, query_id: &str, n: usize) -> Vec<usize> {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(salt.as_bytes());
    hasher.update([0u8]);
    hasher.update(query_id.as_bytes());
    let mut key = [0u8; 32];
    key.copy_from_slice(&hasher.finalize());
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::from_seed(key));
    order
}

/// Invokes every agent and weights each vote by its current historical reliability.
/// Ties go to the answer backed by the lowest pool index.
fn weighted_vote(
    query: &Query,
    state: &GlobalState,
    pool: &AgentPool,
    scoring: &ScoringConfig,
) -> VoteOutcome {
    let ids = pool.ids();
    let mut weights: Vec<(Answer, f64, usize)> = Vec::new();
    let mut votes = Vec::with_capacity(pool.len());
    for (index, id) in ids.into_iter().enumerate() {
        let vote = pool.invoke(index, query);
        if let Some(answer) = vote.answer() {
            let w = historical_reliability(&state.agents[index], scoring).value;
            match weights.iter_mut().find(|(a, _, _)| a == answer) {
                Some(entry) => entry.1 += w,
                None => weights.push((answer.clone(), w, index)),
            }
        }
        votes.push((id, vote));
    }
    let final_answer = weights
        .into_iter()
        .max_by(|a, b| a.1.total_cmp(&b.1).then(b.2.cmp(&a.2)))
        .map(|(a, _, _)| a);
    VoteOutcome {
        query_id: query.id.clone(),
        final_answer,
        order: (0..pool.len()).collect(),
        votes,
        stop_reason: StopReason::FixedBudget,
    }
}

fn run_strategy(
    strategy: Strategy,
    settings: &ExperimentSettings,
    queries: &[Query],
    embeddings: &[EmbeddingVector],
    pool: &AgentPool,
    initial: &GlobalState,
    gold: &HashMap<String, Answer>,
) -> Result<StrategyRun, HarnessError> {
    let n = pool.len();
    let dispatch = DispatchConfig {
        concurrent_initial: settings.parallel > 1,
        prune_impossible: settings.prune_impossible,
    };
    let mut updater = ConfidenceUpdater::new(initial.clone());
    let mut per_query = Vec::with_capacity(queries.len());
    let mut audit = Vec::new();

    for (query, qvec) in queries.iter().zip(embeddings) {
        let vote_err = |source| HarnessError::Vote {
            query: query.id.clone(),
            source,
        };
        let ranked = |scoring: ScoringStrategy| {
            rank_agents(qvec, updater.state(), scoring, &settings.scoring)
                .map(|r| r.into_order())
                .map_err(|source| HarnessError::Embedding {
                    query: query.id.clone(),
                    source,
                })
        };
        let identity: Vec<usize> = (0..n).collect();
        let outcome = match strategy {
            Strategy::SimpleMV => run_fixed_budget(query, &identity, n, pool).map_err(vote_err)?,
            Strategy::WeightedMV => weighted_vote(query, updater.state(), pool, &settings.scoring),
            Strategy::RandomES => {
                let order = random_order(settings.seed, "random-es", &query.id, n);
                run_session(query, &order, pool, &dispatch).map_err(vote_err)?
            }
            Strategy::FixedRandomK(k) => {
                let order = random_order(settings.seed, "fixed-random", &query.id, n);
                run_fixed_budget(query, &order, k, pool).map_err(vote_err)?
            }
            Strategy::FixedTopK(k) => {
                run_fixed_budget(query, &ranked(ScoringStrategy::Historical)?, k, pool)
                    .map_err(vote_err)?
            }
            Strategy::EmsRel => run_session(
                query,
                &ranked(ScoringStrategy::Historical)?,
                pool,
                &dispatch,
            )
            .map_err(vote_err)?,
            Strategy::EmsSim => {
                run_session(query, &ranked(ScoringStrategy::Semantic)?, pool, &dispatch)
                    .map_err(vote_err)?
            }
        };
        if strategy.updates_state() {
            updater
                .apply(&outcome, qvec)
                .map_err(|source| HarnessError::Icu {
                    query: query.id.clone(),
                    source,
                })?;
        }
        let final_answer = outcome.final_answer.as_ref().map(|a| a.canonical.clone());
        per_query.push(QueryResult {
            query_id: query.id.clone(),
            correct: gold
                .get(&query.id)
                .map(|g| final_answer.as_deref() == Some(g.canonical.as_str())),
            final_answer,
            invoked_count: outcome.invoked_count(),
            stop_reason: outcome.stop_reason,
            order: outcome.order.clone(),
        });
        audit.extend(
            trace_records(&outcome)
                .into_iter()
                .map(|record| AuditRecord { strategy, record }),
        );
    }

    Ok(StrategyRun {
        report: StrategyReport {
            strategy,
            metrics: compute_metrics(&per_query, gold),
            per_query,
        },
        audit,
        final_state: strategy.updates_state().then(|| updater.into_state()),
    })
}

/// Embeds each query once; every strategy reuses the same vectors.
pub fn embed_queries(
    queries: &[Query],
    embedder: &dyn EmbeddingProvider,
) -> Result<Vec<EmbeddingVector>, HarnessError> {
    queries
        .iter()
        .map(|q| {
            embedder
                .embed(&q.text)
                .map_err(|source| HarnessError::Embedding {
                    query: q.id.clone(),
                    source,
                })
        })
        .collect()
}

/// Runs all strategies. Each starts from `initial` (or a cold state) and
/// processes queries in dataset order.
pub fn run_experiment(
    settings: &ExperimentSettings,
    queries: &[Query],
    pool: &AgentPool,
    embedder: &dyn EmbeddingProvider,
    initial: Option<&GlobalState>,
) -> Result<ExperimentRun, HarnessError> {
    if settings.strategies.is_empty() {
        return Err(HarnessError::Config("strategies must not be empty".into()));
    }
    if pool.is_empty() {
        return Err(HarnessError::Config("agent pool is empty".into()));
    }
    if settings.buffer_capacity == 0 {
        return Err(HarnessError::Config(
            "buffer capacity must be at least 1".into(),
        ));
    }
    for s in &settings.strategies {
        if let Some(k) = s.budget() {
            if k > pool.len() {
                return Err(HarnessError::Config(format!(
                    "strategy {s} needs k <= pool size {}",
                    pool.len()
                )));
            }
        }
    }
    let initial = match initial {
        Some(state) => {
            state.validate()?;
            if state.len() != pool.len() || state.dim != embedder.dim() {
                return Err(HarnessError::Config(format!(
                    "initial state has {} agents of dimension {}, pool has {} agents and encoder dimension {}",
                    state.len(),
                    state.dim,
                    pool.len(),
                    embedder.dim()
                )));
            }
            state.clone()
        }
        None => GlobalState::fresh(pool.ids(), settings.buffer_capacity, embedder.dim()),
    };

    let embeddings = embed_queries(queries, embedder)?;
    let gold: HashMap<String, Answer> = queries
        .iter()
        .filter_map(|q| Some((q.id.clone(), q.gold.clone()?)))
        .collect();

    let run_one =
        |s: Strategy| run_strategy(s, settings, queries, &embeddings, pool, &initial, &gold);
    let runs: Vec<StrategyRun> = if settings.parallel > 1 {
        let mut runs = Vec::with_capacity(settings.strategies.len());
        for chunk in settings.strategies.chunks(settings.parallel) {
            let results: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&s| scope.spawn(move || run_one(s)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("strategy worker panicked"))
                    .collect()
            });
            for r in results {
                runs.push(r?);
            }
        }
        runs
    } else {
        settings
            .strategies
            .iter()
            .map(|&s| run_one(s))
            .collect::<Result<_, _>>()?
    };

    let config = serde_json::to_value(settings).expect("settings serialize");
    let mut report = ExperimentReport {
        seed: settings.seed,
        pool_size: pool.len(),
        config_digest: config_digest(&config),
        config,
        strategies: Vec::with_capacity(runs.len()),
    };
    let mut audit = Vec::new();
    let mut final_states = Vec::new();
    for run in runs {
        if let Some(state) = run.final_state {
            final_states.push((run.report.strategy, state));
        }
        audit.extend(run.audit);
        report.strategies.push(run.report);
    }
    Ok(ExperimentRun {
        report,
        audit,
        final_states,
    })
}
