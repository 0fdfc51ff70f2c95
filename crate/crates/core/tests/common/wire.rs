use std::collections::BTreeSet;
use std::sync::Mutex;

use serde_json::Value;
use varp_arena::TaskStatus;
use varp_core::agent::{run_episode, AgentConfig};
use varp_core::bench::local_libraries;
use varp_core::gateway::stub::{StubResponse, StubServer};
use varp_core::gateway::*;

pub fn chat_schema() -> jsonschema::JSONSchema {
    let schema: Value =
        serde_json::from_str(include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/schemas/chat_request.schema.json"))).unwrap();
    jsonschema::JSONSchema::compile(&schema).unwrap()
}

pub fn remote_config(stub: &StubServer) -> BackendConfig {
    BackendConfig {
        kind: BackendKind::Remote,
        endpoint: Some(stub.base_url()),
        api_key: Some("test-key".into()),
        backoff_base_secs: 0.005,
        timeout_secs: 10.0,
        ..BackendConfig::default()
    }
}

/// Sends every bundle over HTTP to the stub, after queueing the oracle's
/// answer as the stub's next reply.
pub struct ThroughStub<'a> {
    pub stub: &'a StubServer,
    pub remote: RemoteBackend,
    pub oracle: ScriptedOracle,
    pub bundles: Mutex<Vec<PromptBundle>>,
}

impl<'a> ThroughStub<'a> {
    pub fn new(stub: &'a StubServer) -> Self {
        ThroughStub {
            stub,
            remote: RemoteBackend::new(remote_config(stub)).unwrap(),
            oracle: ScriptedOracle::new(0.02, 0.15),
            bundles: Mutex::new(Vec::new()),
        }
    }
}

impl Backend for ThroughStub<'_> {
    fn complete(&self, bundle: &PromptBundle) -> Result<ModelReply, GatewayError> {
        let answer = self.oracle.complete(bundle)?;
        self.stub.push(StubResponse::chat(&answer.raw_text));
        self.bundles.lock().unwrap().push(bundle.clone());
        let reply = self.remote.complete(bundle)?;
        if reply.raw_text != answer.raw_text || reply.parsed != answer.parsed {
            return Err(GatewayError::Config("stub echoed a different reply".into()));
        }
        Ok(reply)
    }

    fn name(&self) -> &str {
        "through-stub"
    }
}

/// Plays a handful of episodes over HTTP and checks every request the stub saw.
/// Returns the number of requests and the schema ids that were exercised.
pub fn stub_episodes() -> Result<(usize, BTreeSet<SchemaId>), String> {
    let stub = StubServer::start(vec![], |_| StubResponse::status(500)).map_err(|e| e.to_string())?;
    let backend = ThroughStub::new(&stub);
    let libs = local_libraries().map_err(|e| e.to_string())?;
    let full = AgentConfig::default();
    let mono = AgentConfig { dtsa_enabled: false, ..AgentConfig::default() };
    // Combat with counters, a gather task, guided navigation, and the single-query decision path.
    for (task, cfg) in [(10, &full), (3, &full), (12, &full), (2, &mono)] {
        let r = run_episode(task, 1000, &mut libs.clone(), &backend, cfg).map_err(|e| format!("task {task}: {e}"))?;
        if !r.status.is_terminal() || (task != 12 && r.status != TaskStatus::Success) {
            return Err(format!("task {task} ended {:?}", r.status));
        }
    }
    let requests = stub.requests();
    let bundles = backend.bundles.lock().unwrap();
    if requests.len() != bundles.len() {
        return Err(format!("{} requests for {} bundles", requests.len(), bundles.len()));
    }
    let schema = chat_schema();
    let mut seen = BTreeSet::new();
    for (req, bundle) in requests.iter().zip(bundles.iter()) {
        if req.path != "/chat/completions" || req.authorization.as_deref() != Some("Bearer test-key") {
            return Err(format!("unexpected path or auth on {}", bundle.schema_id));
        }
        if let Err(errors) = schema.validate(&req.body) {
            let msgs: Vec<String> = errors.map(|e| e.to_string()).collect();
            return Err(format!("{} request invalid: {msgs:?}", bundle.schema_id));
        }
        if req.body != request_body("gpt-4o", bundle).map_err(|e| e.to_string())? {
            return Err(format!("{} body differs from request_body", bundle.schema_id));
        }
        let images = req.body["messages"][1]["content"].as_array().map_or(0, |a| a.iter().filter(|p| p["type"] == "image_url").count());
        if images != bundle.frames.len() {
            return Err(format!("{} carries {images} images for {} frames", bundle.schema_id, bundle.frames.len()));
        }
        seen.insert(bundle.schema_id);
    }
    Ok((requests.len(), seen))
}

pub fn health_reply() -> StubResponse {
    StubResponse::chat("Sure.\n```json\n{\"heal_now\": true}\n```")
}

pub fn health_bundle() -> PromptBundle {
    PromptBundle::new(SchemaId::HealthReport, "heal?", &serde_json::json!({}), vec![], Trace::default())
}

/// Two 429s then a good reply. Returns (usage.request_count, requests the stub saw).
pub fn rate_limited_call() -> Result<(u32, usize), String> {
    let stub = StubServer::start(vec![StubResponse::status(429), StubResponse::status(429), health_reply()], |_| {
        StubResponse::status(500)
    })
    .map_err(|e| e.to_string())?;
    let reply = RemoteBackend::new(remote_config(&stub)).map_err(|e| e.to_string())?.complete(&health_bundle()).map_err(|e| e.to_string())?;
    Ok((reply.usage.request_count, stub.requests().len()))
}
