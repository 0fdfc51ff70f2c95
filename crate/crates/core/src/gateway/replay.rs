//! Recorded transcripts: one `{schema_id, raw_text}` JSON line per reply.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{parse_structured, Backend, GatewayError, ModelReply, PromptBundle, SchemaId, Usage};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub schema_id: SchemaId,
    pub raw_text: String,
}

/// Serves recorded replies in order, separately per schema. Single consumer.
pub struct ReplayBackend {
    queues: Mutex<BTreeMap<SchemaId, VecDeque<String>>>,
}

impl ReplayBackend {
    pub fn new(lines: Vec<TranscriptLine>) -> Self {
        let mut queues: BTreeMap<SchemaId, VecDeque<String>> = BTreeMap::new();
        for l in lines {
            queues.entry(l.schema_id).or_default().push_back(l.raw_text);
        }
        Self { queues: Mutex::new(queues) }
    }

    pub fn load(path: &Path) -> Result<Self, GatewayError> {
        let text = fs::read_to_string(path).map_err(|e| GatewayError::Config(format!("{}: {e}", path.display())))?;
        let mut lines = Vec::new();
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parsed: TranscriptLine = serde_json::from_str(line)
                .map_err(|e| GatewayError::Config(format!("transcript line {}: {e}", i + 1)))?;
            lines.push(parsed);
        }
        Ok(Self::new(lines))
    }
}

impl Backend for ReplayBackend {
    fn complete(&self, bundle: &PromptBundle) -> Result<ModelReply, GatewayError> {
        let next = self
            .queues
            .lock()
            .expect("replay lock")
            .get_mut(&bundle.schema_id)
            .and_then(VecDeque::pop_front);
        let raw_text = next.ok_or_else(|| GatewayError::Parse {
            schema: bundle.schema_id.to_string(),
            message: "transcript exhausted".into(),
            raw_text: String::new(),
        })?;
        let parsed = parse_structured(&raw_text, bundle.schema_id)?;
        Ok(ModelReply { raw_text, parsed: Some(parsed), usage: Usage { request_count: 1, ..Usage::default() } })
    }

    fn name(&self) -> &str {
        "replay"
    }
}

/// Wraps a backend and keeps every successful reply for export as a transcript.
pub struct RecordingBackend<B> {
    inner: B,
    lines: Mutex<Vec<TranscriptLine>>,
}

impl<B: Backend> RecordingBackend<B> {
    pub fn new(inner: B) -> Self {
        Self { inner, lines: Mutex::new(Vec::new()) }
    }

    pub fn transcript(&self) -> Vec<TranscriptLine> {
        self.lines.lock().expect("recording lock").clone()
    }

    pub fn export(&self, path: &Path) -> std::io::Result<()> {
        let mut out = String::new();
        for line in self.transcript() {
            out.push_str(&serde_json::to_string(&line).expect("transcript line serializes"));
            out.push('\n');
        }
        fs::write(path, out)
    }
}

impl<B: Backend> Backend for RecordingBackend<B> {
    fn complete(&self, bundle: &PromptBundle) -> Result<ModelReply, GatewayError> {
        let reply = self.inner.complete(bundle)?;
        self.lines
            .lock()
            .expect("recording lock")
            .push(TranscriptLine { schema_id: bundle.schema_id, raw_text: reply.raw_text.clone() });
        Ok(reply)
    }

    fn name(&self) -> &str {
        self.inner.name()
    }
}
