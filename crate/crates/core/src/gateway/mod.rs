//! One interface over every reasoning and embedding backend.

mod embed;
mod oracle;
mod remote;
mod replay;
pub mod schema;
pub mod stub;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use varp_arena::Frame;

pub use embed::{cosine, Embedder, EmbeddingVector, LocalTrigramEmbedder, RemoteEmbedder, LOCAL_DIM};
pub use oracle::ScriptedOracle;
pub use remote::{request_body, RemoteBackend};
pub use replay::{RecordingBackend, ReplayBackend, TranscriptLine};
pub use schema::parse_structured;

/// Cap on reply length requested from every backend.
pub const MAX_REPLY_TOKENS: u32 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaId {
    Reflection,
    TaskInference,
    EnemyReport,
    CombatMode,
    HealthReport,
    SpellReport,
    Integration,
    MonolithicDecision,
    EnemyAction,
    GuidanceSummary,
}

impl SchemaId {
    pub const ALL: [SchemaId; 10] = [
        SchemaId::Reflection,
        SchemaId::TaskInference,
        SchemaId::EnemyReport,
        SchemaId::CombatMode,
        SchemaId::HealthReport,
        SchemaId::SpellReport,
        SchemaId::Integration,
        SchemaId::MonolithicDecision,
        SchemaId::EnemyAction,
        SchemaId::GuidanceSummary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SchemaId::Reflection => "reflection",
            SchemaId::TaskInference => "task_inference",
            SchemaId::EnemyReport => "enemy_report",
            SchemaId::CombatMode => "combat_mode",
            SchemaId::HealthReport => "health_report",
            SchemaId::SpellReport => "spell_report",
            SchemaId::Integration => "integration",
            SchemaId::MonolithicDecision => "monolithic_decision",
            SchemaId::EnemyAction => "enemy_action",
            SchemaId::GuidanceSummary => "guidance_summary",
        }
    }

    /// Queries that feed the decision stage; only these are subject to oracle fallibility.
    pub fn is_decision(self) -> bool {
        matches!(
            self,
            SchemaId::EnemyReport
                | SchemaId::CombatMode
                | SchemaId::HealthReport
                | SchemaId::SpellReport
                | SchemaId::Integration
                | SchemaId::MonolithicDecision
        )
    }
}

impl fmt::Display for SchemaId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchemaId {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SchemaId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| GatewayError::Config(format!("unknown schema `{s}`")))
    }
}

/// Where a request sits in an episode; seeds the scripted oracle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub seed: u64,
    pub step: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub schema_id: SchemaId,
    pub system_text: String,
    pub user_segments: Vec<String>,
    pub frames: Vec<Frame>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub trace: Trace,
}

const CONTEXT_OPEN: &str = "```json context\n";

impl PromptBundle {
    /// Builds a bundle with the shipped system prompt for `schema_id` and a
    /// trailing machine-readable context block.
    pub fn new(schema_id: SchemaId, instruction: &str, context: &Value, frames: Vec<Frame>, trace: Trace) -> Self {
        let ctx = serde_json::to_string_pretty(context).unwrap_or_else(|_| "{}".into());
        Self {
            schema_id,
            system_text: schema::system_prompt(schema_id).to_string(),
            user_segments: vec![instruction.to_string(), format!("{CONTEXT_OPEN}{ctx}\n```")],
            frames,
            temperature: 0.0,
            max_tokens: MAX_REPLY_TOKENS,
            trace,
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        if self.user_segments.is_empty() {
            return Err(GatewayError::Domain("prompt needs at least one user segment".into()));
        }
        Ok(())
    }

    /// The context block, if any segment carries one.
    pub fn context(&self) -> Option<Value> {
        self.user_segments.iter().find_map(|seg| {
            let start = seg.find(CONTEXT_OPEN)? + CONTEXT_OPEN.len();
            let end = seg[start..].rfind("```")? + start;
            serde_json::from_str(&seg[start..end]).ok()
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Usage {
    pub request_count: u32,
    pub input_units: u64,
    pub output_units: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReply {
    pub raw_text: String,
    /// Present exactly when `raw_text` validated against the requested schema.
    pub parsed: Option<Value>,
    pub usage: Usage,
}

#[derive(Debug, Error)]
pub enum GatewayError {
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("could not parse {schema} reply: {message}")]
    Parse { schema: String, message: String, raw_text: String },
    #[error("backend configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Domain(String),
}

impl GatewayError {
    pub fn is_parse(&self) -> bool {
        matches!(self, GatewayError::Parse { .. })
    }
}

pub trait Backend: Send + Sync {
    fn complete(&self, bundle: &PromptBundle) -> Result<ModelReply, GatewayError>;

    fn name(&self) -> &str;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    ScriptedOracle,
    Replay,
}

impl FromStr for BackendKind {
    type Err = GatewayError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remote" => Ok(BackendKind::Remote),
            "scripted" | "scripted_oracle" => Ok(BackendKind::ScriptedOracle),
            "replay" => Ok(BackendKind::Replay),
            other => Err(GatewayError::Config(format!("unknown backend `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendConfig {
    pub kind: BackendKind,
    pub endpoint: Option<String>,
    pub api_key: Option<String>,
    pub model: String,
    pub timeout_secs: f64,
    /// Total attempts per request, first try included.
    pub max_attempts: u32,
    pub backoff_base_secs: f64,
    /// Oracle error rate per single-question query.
    pub epsilon_decomposed: f64,
    /// Oracle error rate per question inside a bundled monolithic query.
    pub epsilon_monolithic: f64,
    pub transcript: Option<PathBuf>,
}

impl Default for BackendConfig {
    fn default() -> Self {
        Self {
            kind: BackendKind::ScriptedOracle,
            endpoint: None,
            api_key: None,
            model: "gpt-4o".into(),
            timeout_secs: 60.0,
            max_attempts: 4,
            backoff_base_secs: 0.5,
            epsilon_decomposed: 0.02,
            epsilon_monolithic: 0.15,
            transcript: None,
        }
    }
}

impl BackendConfig {
    /// Remote settings from `VARP_API_BASE` / `VARP_API_KEY`.
    pub fn remote_from_env() -> Self {
        Self {
            kind: BackendKind::Remote,
            endpoint: std::env::var("VARP_API_BASE").ok(),
            api_key: std::env::var("VARP_API_KEY").ok(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GatewayError> {
        for eps in [self.epsilon_decomposed, self.epsilon_monolithic] {
            if !(0.0..1.0).contains(&eps) {
                return Err(GatewayError::Config(format!("epsilon {eps} outside [0, 1)")));
            }
        }
        match self.kind {
            BackendKind::Remote if self.endpoint.is_none() || self.api_key.is_none() => Err(
                GatewayError::Config("remote backend needs VARP_API_BASE and VARP_API_KEY".into()),
            ),
            BackendKind::Replay if self.transcript.is_none() => {
                Err(GatewayError::Config("replay backend needs a transcript path".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs.max(0.001))
    }

    pub fn build(&self) -> Result<Box<dyn Backend>, GatewayError> {
        self.validate()?;
        Ok(match self.kind {
            BackendKind::ScriptedOracle => Box::new(ScriptedOracle::new(self.epsilon_decomposed, self.epsilon_monolithic)),
            BackendKind::Replay => Box::new(ReplayBackend::load(self.transcript.as_deref().expect("validated"))?),
            BackendKind::Remote => Box::new(RemoteBackend::new(self.clone())?),
        })
    }
}
