use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{AgentBackend, AgentError, TraceRecord};
use crate::domain::{AgentId, Answer, AnswerMode, Query, Vote};

/// Stand-in for the correct answer of an unlabeled query.
pub const LATENT_ANSWER: &str = "latent";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WrongAnswerModel {
    /// Uniform over `k` shared distractors `wrong-1 .. wrong-k`.
    UniformDistractor {
        k: u32,
    },
    FixedDistractor {
        answer: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatencyModel {
    pub mean_ms: u64,
    pub jitter_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub label: String,
    pub base_accuracy: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topic_accuracy: Option<BTreeMap<String, f64>>,
    pub wrong_answer: WrongAnswerModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub latency: Option<LatencyModel>,
}

impl AgentProfile {
    pub fn new(
        label: impl Into<String>,
        base_accuracy: f64,
        wrong_answer: WrongAnswerModel,
    ) -> Self {
        Self {
            label: label.into(),
            base_accuracy,
            topic_accuracy: None,
            wrong_answer,
            latency: None,
        }
    }

    pub fn with_topic(mut self, topic: impl Into<String>, accuracy: f64) -> Self {
        self.topic_accuracy
            .get_or_insert_with(BTreeMap::new)
            .insert(topic.into(), accuracy);
        self
    }

    pub fn accuracy_for(&self, topic: Option<&str>) -> f64 {
        topic
            .and_then(|t| self.topic_accuracy.as_ref()?.get(t).copied())
            .unwrap_or(self.base_accuracy)
    }

    pub fn validate(&self) -> Result<(), AgentError> {
        let bad = |message: String| AgentError::InvalidProfile {
            agent: self.label.clone(),
            message,
        };
        let in_unit = |p: f64| (0.0..=1.0).contains(&p);
        if !in_unit(self.base_accuracy) {
            return Err(bad(format!(
                "base_accuracy {} outside [0, 1]",
                self.base_accuracy
            )));
        }
        for (topic, &p) in self.topic_accuracy.iter().flatten() {
            if !in_unit(p) {
                return Err(bad(format!(
                    "accuracy {p} for topic `{topic}` outside [0, 1]"
                )));
            }
        }
        if let WrongAnswerModel::UniformDistractor { k: 0 } = self.wrong_answer {
            return Err(bad("uniform distractor needs k >= 1".into()));
        }
        Ok(())
    }

    /// Reads a JSON array of profiles; pool indices follow array order.
    pub fn load_file(path: &Path) -> Result<Vec<AgentProfile>, AgentError> {
        let text = std::fs::read_to_string(path).map_err(|source| AgentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let profiles: Vec<AgentProfile> =
            serde_json::from_str(&text).map_err(|e| AgentError::InvalidProfile {
                agent: path.display().to_string(),
                message: e.to_string(),
            })?;
        for p in &profiles {
            p.validate()?;
        }
        Ok(profiles)
    }
}

/// A profile-driven agent whose answer depends only on (seed, agent, query).
#[derive(Debug, Clone)]
pub struct SimulatedAgent {
    id: AgentId,
    profile: AgentProfile,
    seed: u64,
    mode: AnswerMode,
    sleep: bool,
}

impl SimulatedAgent {
    pub fn new(
        index: usize,
        profile: AgentProfile,
        seed: u64,
        mode: AnswerMode,
    ) -> Result<Self, AgentError> {
        profile.validate()?;
        Ok(Self {
            id: AgentId::new(index, profile.label.clone()),
            profile,
            seed,
            mode,
            sleep: true,
        })
    }

    /// Skip latency sleeps (answers are unaffected).
    pub fn without_latency(mut self) -> Self {
        self.sleep = false;
        self
    }

    pub fn profile(&self) -> &AgentProfile {
        &self.profile
    }

    fn rng(&self, query_id: &str, stream: u8) -> ChaCha8Rng {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update((self.id.index as u64).to_le_bytes());
        hasher.update([stream]);
        hasher.update(query_id.as_bytes());
        let digest = hasher.finalize();
        let mut seed = [0u8; 32];
        seed.copy_from_slice(&digest);
        ChaCha8Rng::from_seed(seed)
    }

    /// Raw answer text, before canonicalization.
    pub fn raw_answer(&self, query: &Query) -> String {
        let mut rng = self.rng(&query.id, 0);
        let p = self.profile.accuracy_for(query.topic.as_deref());
        if rng.gen_bool(p) {
            return match &query.gold {
                Some(g) => g.raw.clone(),
                None => LATENT_ANSWER.to_string(),
            };
        }
        match &self.profile.wrong_answer {
            WrongAnswerModel::UniformDistractor { k } => format!("wrong-{}", rng.gen_range(1..=*k)),
            WrongAnswerModel::FixedDistractor { answer } => answer.clone(),
        }
    }

    fn simulated_latency(&self, query_id: &str) -> Option<Duration> {
        let model = self.profile.latency?;
        let mut rng = self.rng(query_id, 1);
        let jitter = if model.jitter_ms == 0 {
            0
        } else {
            rng.gen_range(0..=2 * model.jitter_ms)
        };
        Some(Duration::from_millis(
            (model.mean_ms + jitter).saturating_sub(model.jitter_ms),
        ))
    }
}

impl AgentBackend for SimulatedAgent {
    fn id(&self) -> &AgentId {
        &self.id
    }

    fn invoke(&self, query: &Query) -> Result<Vote, AgentError> {
        if self.sleep {
            if let Some(d) = self.simulated_latency(&query.id) {
                std::thread::sleep(d);
            }
        }
        Ok(Vote::Answer(Answer::new(self.raw_answer(query), self.mode)))
    }
}

/// Materializes every (agent, query) answer, query-major, agent-minor.
pub fn simulated_answer_stream(agents: &[SimulatedAgent], queries: &[Query]) -> Vec<TraceRecord> {
    queries
        .iter()
        .flat_map(|q| {
            agents.iter().map(move |a| TraceRecord {
                query_id: q.id.clone(),
                agent_id: a.id.index,
                answer: a.raw_answer(q),
            })
        })
        .collect()
}
