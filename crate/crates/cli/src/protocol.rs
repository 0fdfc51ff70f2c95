//! Messages on the live session socket. Each WebSocket text message is one
//! JSON object carrying the protocol version `v`, a sequence number `seq`
//! that strictly increases per direction, and a `type` tag.
//!
//! ```text
//! → {"v":1,"seq":1,"type":"control","action":"start","task_id":2,"seed":7}
//! ← {"v":1,"seq":1,"type":"frame_update","mode":"human","tick":0,...}
//! → {"v":1,"seq":2,"type":"input","kind":"mouse_button","code":"MouseLeft"}
//! ```

use serde::{Deserialize, Serialize};
use serde_json::Value;
use varp_arena::{Frame, TaskStatus};
use varp_core::guidance::InputKind;

pub const PROTOCOL_VERSION: u32 = 1;
/// Close code sent when a client speaks another protocol version.
pub const CLOSE_VERSION_MISMATCH: u16 = 4001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Human,
    Agent,
    /// An agent episode paused while a human drives.
    Takeover,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub v: u32,
    pub seq: u64,
    #[serde(flatten)]
    pub body: T,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    FrameUpdate {
        mode: Mode,
        tick: u64,
        status: TaskStatus,
        paused: bool,
        recording: bool,
        frame: Frame,
    },
    SessionSaved {
        path: String,
    },
    Error {
        code: ErrorCode,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    /// The request is not allowed in the session's current state.
    Protocol,
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientMessage {
    /// A raw device event. The server stamps the tick.
    Input { kind: InputKind, code: String },
    Control {
        #[serde(flatten)]
        control: Control,
    },
}

fn yes() -> bool {
    true
}

fn human() -> Mode {
    Mode::Human
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum Control {
    Start {
        task_id: u8,
        seed: u64,
        #[serde(default = "human")]
        mode: Mode,
        #[serde(default = "yes")]
        record: bool,
    },
    Mode {
        mode: Mode,
    },
    Pause,
    Resume,
    Save,
}

#[derive(Debug, PartialEq)]
pub enum Decoded {
    Message(Envelope<ClientMessage>),
    WrongVersion(u64),
    Malformed(String),
}

/// Version is checked before anything else so a newer client gets a clean
/// close instead of a stream of parse errors.
pub fn decode(text: &str) -> Decoded {
    let value: Value = match serde_json::from_str(text) {
        Ok(v) => v,
        Err(e) => return Decoded::Malformed(e.to_string()),
    };
    match value.get("v").and_then(Value::as_u64) {
        None => return Decoded::Malformed("missing protocol version".into()),
        Some(v) if v != u64::from(PROTOCOL_VERSION) => return Decoded::WrongVersion(v),
        Some(_) => {}
    }
    match serde_json::from_value(value) {
        Ok(m) => Decoded::Message(m),
        Err(e) => Decoded::Malformed(e.to_string()),
    }
}

/// The shipped JSON Schema for both directions.
pub fn schema() -> Value {
    serde_json::from_str(include_str!("../assets/protocol.schema.json")).expect("shipped schema is valid JSON")
}
