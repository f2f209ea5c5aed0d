//! Transport layer for the three-agent pipeline: the backend trait, the
//! JSON-over-HTTP implementation configured by environment variables, and
//! the environment-variable names themselves.

use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use std::time::Duration;

/// Environment variable holding the chat endpoint URL. Unset → offline
/// fallback rules are used instead of a backend.
pub const ENV_URL: &str = "HYDRORL_LLM_URL";
/// Environment variable holding the bearer token (optional).
pub const ENV_KEY: &str = "HYDRORL_LLM_KEY";
/// Environment variable holding the model identifier (optional).
pub const ENV_MODEL: &str = "HYDRORL_LLM_MODEL";

/// The three collaborating roles, in pipeline order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AgentRole {
    TaskAnalysis,
    TaskImplementation,
    CodeGeneration,
}

impl AgentRole {
    /// Position in the mandatory execution order.
    pub fn order(self) -> usize {
        match self {
            AgentRole::TaskAnalysis => 0,
            AgentRole::TaskImplementation => 1,
            AgentRole::CodeGeneration => 2,
        }
    }

    /// Spelling used in request bodies.
    pub fn wire_name(self) -> &'static str {
        match self {
            AgentRole::TaskAnalysis => "task-analysis",
            AgentRole::TaskImplementation => "task-implementation",
            AgentRole::CodeGeneration => "code-generation",
        }
    }
}

/// A blocking chat-style completion backend. `request` is the stage payload
/// (dossier plus any upstream outputs); the reply must be the role's
/// structured output as JSON.
pub trait LlmBackend {
    fn complete(&self, role: AgentRole, request: &Value) -> Result<Value>;
    fn name(&self) -> &'static str;
}

/// JSON-over-HTTP backend. Sends `{role, dossier, schema_version, model?}`
/// and expects the role's output object back (optionally wrapped in a
/// `{"content": …}` envelope).
pub struct HttpBackend {
    url: String,
    key: Option<String>,
    model: Option<String>,
    agent: ureq::Agent,
}

impl std::fmt::Debug for HttpBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpBackend")
            .field("url", &self.url)
            .field("model", &self.model)
            .field("key", &self.key.as_deref().map(|_| "<set>"))
            .finish()
    }
}

impl HttpBackend {
    /// Build a backend against an explicit endpoint.
    pub fn new(
        url: impl Into<String>,
        key: Option<String>,
        model: Option<String>,
        timeout: Duration,
    ) -> Self {
        Self {
            url: url.into(),
            key,
            model,
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }

    /// Backend from `HYDRORL_LLM_URL` / `HYDRORL_LLM_KEY` /
    /// `HYDRORL_LLM_MODEL`; `None` when no URL is configured.
    pub fn from_env() -> Option<Self> {
        let url = std::env::var(ENV_URL).ok().filter(|u| !u.trim().is_empty())?;
        Some(Self::new(
            url,
            std::env::var(ENV_KEY).ok().filter(|k| !k.is_empty()),
            std::env::var(ENV_MODEL).ok().filter(|m| !m.is_empty()),
            Duration::from_secs(60),
        ))
    }

    /// Endpoint URL.
    pub fn url(&self) -> &str {
        &self.url
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, role: AgentRole, request: &Value) -> Result<Value> {
        let body = json!({
            "role": role.wire_name(),
            "schema_version": 1,
            "model": self.model,
            "dossier": request,
        });
        let mut req = self.agent.post(&self.url);
        if let Some(key) = &self.key {
            req = req.set("Authorization", &format!("Bearer {key}"));
        }
        let resp = req.send_json(body).map_err(|e| match e {
            ureq::Error::Status(code, _) => {
                Error::Backend(format!("{} returned HTTP {code}", self.url))
            }
            ureq::Error::Transport(t) => Error::Backend(format!("transport failure: {t}")),
        })?;
        let value: Value = resp
            .into_json()
            .map_err(|e| Error::Backend(format!("reply is not JSON: {e}")))?;
        // Allow a {"content": …} envelope around the role output.
        match value {
            Value::Object(mut map) if map.contains_key("content") => {
                Ok(map.remove("content").expect("key checked above"))
            }
            other => Ok(other),
        }
    }

    fn name(&self) -> &'static str {
        "http"
    }
}
