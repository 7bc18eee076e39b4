//! Adaptive incremental voting.
//!
//! A [`VoteSession`] takes votes strictly in ranking order and decides as
//! soon as one answer holds `tau = ceil((N + 1) / 2)` votes. If all `N`
//! agents vote without a quorum, the plurality answer wins, which is exactly
//! full-pool majority voting.
//!
//! Plurality ties are broken by the lowest pool index among each answer's
//! supporters. The rule does not depend on the invocation order, so the
//! final answer is the same however the pool was ranked.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::AgentPool;
use crate::domain::{AgentId, Answer, Query, StopReason, Vote, VoteOutcome};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VoteError {
    #[error("pool size must be at least 1")]
    EmptyPool,
    #[error("ranking is not a permutation of 0..{0}")]
    InvalidRanking(usize),
    #[error("agent {got} voted out of order (expected agent {expected})")]
    OutOfOrder { expected: usize, got: usize },
    #[error("agent {0} already voted")]
    DuplicateVote(usize),
    #[error("session is closed")]
    SessionClosed,
    #[error("session is not exhausted yet")]
    NotExhausted,
    #[error("session is still collecting votes")]
    NotFinished,
    #[error("fixed budget {k} outside 1..={n}")]
    InvalidBudget { k: usize, n: usize },
}

/// Minimum vote count that makes an answer an absolute majority of `n`.
pub fn majority_threshold(n: usize) -> Result<usize, VoteError> {
    if n == 0 {
        return Err(VoteError::EmptyPool);
    }
    Ok(n / 2 + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SessionStatus {
    Collecting,
    Decided(Answer),
    Exhausted,
}

#[derive(Debug, Clone)]
struct TallyEntry {
    answer: Answer,
    count: usize,
    lowest_supporter: usize,
}

/// Vote counts keyed by canonical answer, in first-seen order.
#[derive(Debug, Clone, Default)]
pub struct Tally {
    entries: IndexMap<String, TallyEntry>,
}

impl Tally {
    pub fn add(&mut self, agent_index: usize, answer: &Answer) -> usize {
        let entry = self
            .entries
            .entry(answer.canonical.clone())
            .or_insert_with(|| TallyEntry {
                answer: answer.clone(),
                count: 0,
                lowest_supporter: agent_index,
            });
        entry.count += 1;
        entry.lowest_supporter = entry.lowest_supporter.min(agent_index);
        entry.count
    }

    pub fn count(&self, answer: &Answer) -> usize {
        self.entries.get(&answer.canonical).map_or(0, |e| e.count)
    }

    pub fn max_count(&self) -> usize {
        self.entries.values().map(|e| e.count).max().unwrap_or(0)
    }

    pub fn counts(&self) -> impl Iterator<Item = (&Answer, usize)> + '_ {
        self.entries.values().map(|e| (&e.answer, e.count))
    }

    /// Most frequent answer; ties go to the answer backed by the lowest pool index.
    pub fn plurality(&self) -> Option<Answer> {
        self.entries
            .values()
            .max_by(|a, b| {
                a.count
                    .cmp(&b.count)
                    .then(b.lowest_supporter.cmp(&a.lowest_supporter))
            })
            .map(|e| e.answer.clone())
    }
}

/// One query's in-flight voting state.
#[derive(Debug, Clone)]
pub struct VoteSession {
    query_id: String,
    pool: Vec<AgentId>,
    order: Vec<usize>,
    tau: usize,
    votes: Vec<(AgentId, Vote)>,
    voted: Vec<bool>,
    tally: Tally,
    status: SessionStatus,
    prune_impossible: bool,
    unreachable: bool,
}

impl VoteSession {
    pub fn new(
        query_id: impl Into<String>,
        pool: Vec<AgentId>,
        order: Vec<usize>,
    ) -> Result<Self, VoteError> {
        let n = pool.len();
        let tau = majority_threshold(n)?;
        if !is_permutation(&order, n) {
            return Err(VoteError::InvalidRanking(n));
        }
        Ok(Self {
            query_id: query_id.into(),
            pool,
            order,
            tau,
            votes: Vec::with_capacity(n),
            voted: vec![false; n],
            tally: Tally::default(),
            status: SessionStatus::Collecting,
            prune_impossible: false,
            unreachable: false,
        })
    }

    /// Stop once no answer can still reach tau.
    ///
    /// The fallback plurality is then taken over a prefix, so it can differ
    /// from the full-pool plurality. Off by default.
    pub fn with_pruning(mut self, enabled: bool) -> Self {
        self.prune_impossible = enabled;
        self
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    pub fn status(&self) -> &SessionStatus {
        &self.status
    }

    pub fn votes(&self) -> &[(AgentId, Vote)] {
        &self.votes
    }

    pub fn tally(&self) -> &Tally {
        &self.tally
    }

    /// Agent index that must vote next, if the session is still collecting.
    pub fn next_agent(&self) -> Option<usize> {
        match self.status {
            SessionStatus::Collecting => self.order.get(self.votes.len()).copied(),
            _ => None,
        }
    }

    pub fn submit_vote(&mut self, agent: usize, vote: Vote) -> Result<&SessionStatus, VoteError> {
        if self.status != SessionStatus::Collecting {
            return Err(VoteError::SessionClosed);
        }
        let expected = self.order[self.votes.len()];
        if agent != expected {
            if self.voted.get(agent).copied().unwrap_or(false) {
                return Err(VoteError::DuplicateVote(agent));
            }
            return Err(VoteError::OutOfOrder {
                expected,
                got: agent,
            });
        }
        self.voted[agent] = true;
        let support = vote.answer().map(|a| self.tally.add(agent, a));
        if let (Some(count), Some(answer)) = (support, vote.answer()) {
            if count >= self.tau {
                self.status = SessionStatus::Decided(answer.clone());
            }
        }
        self.votes.push((self.pool[agent].clone(), vote));

        if self.status == SessionStatus::Collecting {
            let remaining = self.pool.len() - self.votes.len();
            if remaining == 0 {
                self.status = SessionStatus::Exhausted;
            } else if self.prune_impossible && self.tally.max_count() + remaining < self.tau {
                self.unreachable = true;
                self.status = SessionStatus::Exhausted;
            }
        }
        Ok(&self.status)
    }

    pub fn finalize_plurality(&self) -> Result<Option<Answer>, VoteError> {
        match self.status {
            SessionStatus::Exhausted => Ok(self.tally.plurality()),
            _ => Err(VoteError::NotExhausted),
        }
    }

    pub fn into_outcome(self) -> Result<VoteOutcome, VoteError> {
        let (final_answer, stop_reason) = match &self.status {
            SessionStatus::Collecting => return Err(VoteError::NotFinished),
            SessionStatus::Decided(a) => (Some(a.clone()), StopReason::QuorumReached),
            SessionStatus::Exhausted => (
                self.tally.plurality(),
                if self.unreachable {
                    StopReason::QuorumUnreachable
                } else {
                    StopReason::PluralityFallback
                },
            ),
        };
        Ok(VoteOutcome {
            query_id: self.query_id,
            final_answer,
            order: self.order,
            votes: self.votes,
            stop_reason,
        })
    }
}

fn is_permutation(order: &[usize], n: usize) -> bool {
    if order.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    order
        .iter()
        .all(|&i| i < n && !std::mem::replace(&mut seen[i], true))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DispatchConfig {
    /// Invoke the first tau agents concurrently. Votes are still tallied in rank order.
    pub concurrent_initial: bool,
    pub prune_impossible: bool,
}

/// Runs the full incremental protocol against a backend pool.
///
/// Backend errors become abstentions.
pub fn run_session(
    query: &Query,
    order: &[usize],
    pool: &AgentPool,
    dispatch: &DispatchConfig,
) -> Result<VoteOutcome, VoteError> {
    let mut session = VoteSession::new(query.id.clone(), pool.ids(), order.to_vec())?
        .with_pruning(dispatch.prune_impossible);
    let tau = session.tau();

    let initial: Vec<Vote> = if dispatch.concurrent_initial && tau > 1 {
        std::thread::scope(|scope| {
            let handles: Vec<_> = order[..tau]
                .iter()
                .map(|&agent| scope.spawn(move || pool.invoke(agent, query)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("agent invocation panicked"))
                .collect()
        })
    } else {
        order[..tau]
            .iter()
            .map(|&agent| pool.invoke(agent, query))
            .collect()
    };
    for (&agent, vote) in order.iter().zip(initial) {
        session.submit_vote(agent, vote)?;
    }
    while let Some(agent) = session.next_agent() {
        let vote = pool.invoke(agent, query);
        session.submit_vote(agent, vote)?;
    }
    session.into_outcome()
}

/// Invokes exactly the first `k` agents of `order` and takes their plurality.
pub fn run_fixed_budget(
    query: &Query,
    order: &[usize],
    k: usize,
    pool: &AgentPool,
) -> Result<VoteOutcome, VoteError> {
    let n = pool.len();
    if !is_permutation(order, n) {
        return Err(VoteError::InvalidRanking(n));
    }
    if k == 0 || k > n {
        return Err(VoteError::InvalidBudget { k, n });
    }
    let ids = pool.ids();
    let mut tally = Tally::default();
    let mut votes = Vec::with_capacity(k);
    for &agent in &order[..k] {
        let vote = pool.invoke(agent, query);
        if let Some(a) = vote.answer() {
            tally.add(agent, a);
        }
        votes.push((ids[agent].clone(), vote));
    }
    Ok(VoteOutcome {
        query_id: query.id.clone(),
        final_answer: tally.plurality(),
        order: order.to_vec(),
        votes,
        stop_reason: StopReason::FixedBudget,
    })
}

/// One line of the per-session vote trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionTraceRecord {
    pub query_id: String,
    /// 1-based invocation rank.
    pub rank: usize,
    pub agent_id: usize,
    pub answer: Option<String>,
    pub abstain: bool,
    /// Invoked count at which the session stopped.
    pub decided_after: usize,
}

pub fn trace_records(outcome: &VoteOutcome) -> Vec<SessionTraceRecord> {
    outcome
        .votes
        .iter()
        .enumerate()
        .map(|(pos, (id, vote))| SessionTraceRecord {
            query_id: outcome.query_id.clone(),
            rank: pos + 1,
            agent_id: id.index,
            answer: vote.answer().map(|a| a.canonical.clone()),
            abstain: vote.is_abstain(),
            decided_after: outcome.invoked_count(),
        })
        .collect()
}
