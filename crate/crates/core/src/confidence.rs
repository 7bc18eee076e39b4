//! Per-query agent scoring and the descending-reliability invocation order.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::domain::{AgentConfidence, GlobalState};
use crate::embedding::{cosine, EmbeddingError, EmbeddingVector};

pub const COLD_START_PRIOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoringStrategy {
    /// Agreement rate with past consensus, c / v.
    Historical,
    /// Mean cosine between the query and the agent's agreed-query buffer.
    Semantic,
}

impl FromStr for ScoringStrategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "historical" => Ok(Self::Historical),
            "semantic" => Ok(Self::Semantic),
            other => Err(format!(
                "unknown scoring strategy `{other}` (historical | semantic)"
            )),
        }
    }
}

impl fmt::Display for ScoringStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Historical => "historical",
            Self::Semantic => "semantic",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    /// Score given to agents with no history (v = 0 or empty buffer).
    pub cold_start_prior: f64,
    /// Use (c + 1) / (v + 2) instead of c / v.
    pub laplace: bool,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        Self {
            cold_start_prior: COLD_START_PRIOR,
            laplace: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub value: f64,
    pub strategy: ScoringStrategy,
}

pub fn historical_reliability(phi: &AgentConfidence, config: &ScoringConfig) -> Score {
    let value = if config.laplace {
        (phi.agreed as f64 + 1.0) / (phi.participated as f64 + 2.0)
    } else if phi.participated == 0 {
        config.cold_start_prior
    } else {
        phi.agreed as f64 / phi.participated as f64
    };
    Score {
        value,
        strategy: ScoringStrategy::Historical,
    }
}

pub fn semantic_reliability(
    query: &EmbeddingVector,
    phi: &AgentConfidence,
    config: &ScoringConfig,
) -> Result<Score, EmbeddingError> {
    let value = if phi.buffer.is_empty() {
        config.cold_start_prior
    } else {
        let mut total = 0.0;
        for h in &phi.buffer {
            total += cosine(query, h)?;
        }
        total / phi.buffer.len() as f64
    };
    Ok(Score {
        value,
        strategy: ScoringStrategy::Semantic,
    })
}

/// A permutation of agent indices with the scores that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    order: Vec<usize>,
    /// `scores[k]` belongs to agent `order[k]`.
    scores: Vec<Score>,
}

impl Ranking {
    /// Stable descending sort; equal scores keep ascending agent index.
    pub fn from_scores(scores: Vec<Score>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        order.sort_by(|&a, &b| scores[b].value.total_cmp(&scores[a].value).then(a.cmp(&b)));
        let scores = order.iter().map(|&i| scores[i]).collect();
        Self { order, scores }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn scores(&self) -> &[Score] {
        &self.scores
    }

    pub fn into_order(self) -> Vec<usize> {
        self.order
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

pub fn score_agents(
    query: &EmbeddingVector,
    state: &GlobalState,
    strategy: ScoringStrategy,
    config: &ScoringConfig,
) -> Result<Vec<Score>, EmbeddingError> {
    state
        .agents
        .iter()
        .map(|phi| match strategy {
            ScoringStrategy::Historical => Ok(historical_reliability(phi, config)),
            ScoringStrategy::Semantic => semantic_reliability(query, phi, config),
        })
        .collect()
}

pub fn rank_agents(
    query: &EmbeddingVector,
    state: &GlobalState,
    strategy: ScoringStrategy,
    config: &ScoringConfig,
) -> Result<Ranking, EmbeddingError> {
    score_agents(query, state, strategy, config).map(Ranking::from_scores)
}
