use std::sync::{Condvar, Mutex, OnceLock};
use std::time::Duration;

use regex::Regex;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{AgentBackend, AgentError};
use crate::domain::{AgentId, Answer, AnswerMode, Query, Vote};

pub const DEFAULT_RETRIES: u32 = 2;

/// `{query}` is replaced by the query text.
pub const PROMPT_TEMPLATE: &str = "{query}\n\nReason step by step. End your reply with a final line of the form `ANSWER: <value>`.";

fn default_timeout_ms() -> u64 {
    30_000
}

fn default_retries() -> u32 {
    DEFAULT_RETRIES
}

fn default_in_flight() -> usize {
    4
}

/// One chat-completion endpoint, as listed in an endpoints file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HttpAgentConfig {
    pub label: String,
    pub url: String,
    pub model: String,
    /// Name of the environment variable holding the bearer token.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_env: Option<String>,
    #[serde(default = "default_timeout_ms")]
    pub timeout_ms: u64,
    #[serde(default = "default_retries")]
    pub retries: u32,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
}

impl HttpAgentConfig {
    pub fn new(label: impl Into<String>, url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            label: label.into(),
            url: url.into(),
            model: model.into(),
            token_env: None,
            timeout_ms: default_timeout_ms(),
            retries: default_retries(),
            max_in_flight: default_in_flight(),
        }
    }
}

/// Last `ANSWER: <value>` line in a completion.
pub fn extract_answer(content: &str) -> Option<String> {
    static PATTERN: OnceLock<Regex> = OnceLock::new();
    let re = PATTERN.get_or_init(|| Regex::new(r"ANSWER:\s*(.+)").expect("valid regex"));
    re.captures_iter(content)
        .last()
        .map(|c| c[1].trim().to_string())
        .filter(|s| !s.is_empty())
}

struct InFlight {
    limit: usize,
    active: Mutex<usize>,
    freed: Condvar,
}

impl InFlight {
    fn acquire(&self) -> InFlightGuard<'_> {
        let mut active = self.active.lock().unwrap_or_else(|e| e.into_inner());
        while *active >= self.limit {
            active = self.freed.wait(active).unwrap_or_else(|e| e.into_inner());
        }
        *active += 1;
        InFlightGuard(self)
    }
}

struct InFlightGuard<'a>(&'a InFlight);

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.0.active.lock().unwrap_or_else(|e| e.into_inner()) -= 1;
        self.0.freed.notify_one();
    }
}

/// Generic chat-completion agent.
pub struct HttpAgent {
    id: AgentId,
    config: HttpAgentConfig,
    token: Option<String>,
    mode: AnswerMode,
    client: ureq::Agent,
    in_flight: InFlight,
}

impl HttpAgent {
    pub fn new(
        index: usize,
        config: HttpAgentConfig,
        mode: AnswerMode,
    ) -> Result<Self, AgentError> {
        let token = match &config.token_env {
            Some(var) => Some(std::env::var(var).map_err(|_| AgentError::InvalidProfile {
                agent: config.label.clone(),
                message: format!("environment variable `{var}` is not set"),
            })?),
            None => None,
        };
        let client = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        Ok(Self {
            id: AgentId::new(index, config.label.clone()),
            in_flight: InFlight {
                limit: config.max_in_flight.max(1),
                active: Mutex::new(0),
                freed: Condvar::new(),
            },
            config,
            token,
            mode,
            client,
        })
    }

    pub fn request_body(&self, query: &Query) -> Value {
        json!({
            "model": self.config.model,
            "messages": [{
                "role": "user",
                "content": PROMPT_TEMPLATE.replace("{query}", &query.text),
            }],
            "temperature": 0,
        })
    }

    fn attempt(&self, body: &Value) -> Result<String, String> {
        let _slot = self.in_flight.acquire();
        let mut request = self.client.post(&self.config.url);
        if let Some(token) = &self.token {
            request = request.header("Authorization", &format!("Bearer {token}"));
        }
        let mut response = request.send_json(body).map_err(|e| e.to_string())?;
        let reply: Value = response.body_mut().read_json().map_err(|e| e.to_string())?;
        reply
            .pointer("/choices/0/message/content")
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| "response has no choices[0].message.content".to_string())
    }

    fn failure(&self, message: String) -> AgentError {
        AgentError::Backend {
            agent: self.id.label.clone(),
            message,
        }
    }
}

impl AgentBackend for HttpAgent {
    fn id(&self) -> &AgentId {
        &self.id
    }

    /// Transport failures are retried `retries` times before giving up.
    fn invoke(&self, query: &Query) -> Result<Vote, AgentError> {
        let body = self.request_body(query);
        let mut last_error = String::new();
        for _ in 0..=self.config.retries {
            match self.attempt(&body) {
                Ok(content) => {
                    return extract_answer(&content)
                        .map(|raw| Vote::Answer(Answer::new(raw, self.mode)))
                        .ok_or_else(|| self.failure("no `ANSWER:` line in completion".into()));
                }
                Err(e) => last_error = e,
            }
        }
        Err(self.failure(last_error))
    }
}
