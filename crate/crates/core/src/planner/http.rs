use std::time::Duration;

use serde_json::json;

use super::{Conversation, PlannerError, PlannerPort};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Clone, Debug, PartialEq)]
pub struct HttpPlannerConfig {
    pub endpoint: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl HttpPlannerConfig {
    /// Reads `PLANNER_ENDPOINT`, `PLANNER_MODEL` and `PLANNER_API_KEY`.
    pub fn from_env() -> Result<Self, PlannerError> {
        let endpoint = std::env::var("PLANNER_ENDPOINT")
            .ok()
            .filter(|s| !s.trim().is_empty())
            .ok_or_else(|| PlannerError::Config("PLANNER_ENDPOINT is not set".into()))?;
        Ok(Self {
            endpoint,
            model: std::env::var("PLANNER_MODEL").unwrap_or_else(|_| "default".into()),
            api_key: std::env::var("PLANNER_API_KEY").ok().filter(|s| !s.is_empty()),
            timeout: DEFAULT_TIMEOUT,
        })
    }
}

/// Chat-completion style endpoint: posts `{model, messages}` and reads the
/// first choice's message content.
pub struct HttpPlanner {
    config: HttpPlannerConfig,
    client: reqwest::blocking::Client,
}

impl HttpPlanner {
    pub fn new(config: HttpPlannerConfig) -> Result<Self, PlannerError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| PlannerError::Config(e.to_string()))?;
        Ok(Self { config, client })
    }

    pub fn from_env() -> Result<Self, PlannerError> {
        Self::new(HttpPlannerConfig::from_env()?)
    }

    pub fn config(&self) -> &HttpPlannerConfig {
        &self.config
    }
}

impl PlannerPort for HttpPlanner {
    fn name(&self) -> &str {
        "llm"
    }

    fn respond(&mut self, conversation: &Conversation) -> Result<String, PlannerError> {
        let messages: Vec<_> =
            conversation.window().into_iter().map(|m| json!({"role": m.role, "content": m.content})).collect();
        let mut req = self.client.post(&self.config.endpoint).json(&json!({"model": self.config.model, "messages": messages}));
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                PlannerError::PortTimeout
            } else {
                PlannerError::Transport(e.to_string())
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(PlannerError::PortHttpError(status.as_u16()));
        }
        let body: serde_json::Value = resp.json().map_err(|e| {
            if e.is_timeout() {
                PlannerError::PortTimeout
            } else {
                PlannerError::Transport(format!("malformed response: {e}"))
            }
        })?;
        body.pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .map(str::to_string)
            .ok_or_else(|| PlannerError::Transport("response has no choices[0].message.content".into()))
    }
}
