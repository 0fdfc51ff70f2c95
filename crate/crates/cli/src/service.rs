//! The live session service: one WebSocket connection is one session with its
//! own world. Play is turn-gated, so the world only moves when a human input
//! maps to a command or the agent takes a step.

use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use axum::extract::ws::{CloseFrame, Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use serde_json::json;
use tokio::net::TcpListener;
use tower_http::services::ServeDir;
use varp_arena::{AtomicCommand, ExecOutcome, Frame, TaskSpec, TaskStatus};
use varp_core::agent::{run_step, AgentConfig, ArenaEnv, Environment, EpisodeState, Libraries};
use varp_core::gateway::Backend;
use varp_core::guidance::{
    events_to_atomics, InputEvent, InputKind, Keymap, SessionHeader, SessionRecorder, SESSION_FORMAT_VERSION,
};

use crate::protocol::*;

const PLACEHOLDER_PAGE: &str = include_str!("../assets/ui/index.html");

pub struct AppState {
    pub backend: Arc<dyn Backend>,
    pub libraries: Libraries,
    pub agent: AgentConfig,
    pub keymap: Keymap,
    pub sessions_dir: PathBuf,
    /// Pause between agent steps so a watcher can follow along.
    pub step_interval: Duration,
    malformed: AtomicU64,
    active: AtomicUsize,
    next_session: AtomicU64,
}

impl AppState {
    pub fn new(backend: Arc<dyn Backend>, libraries: Libraries, agent: AgentConfig, sessions_dir: PathBuf) -> Self {
        Self {
            backend,
            libraries,
            agent,
            keymap: Keymap::default(),
            sessions_dir,
            step_interval: Duration::ZERO,
            malformed: AtomicU64::new(0),
            active: AtomicUsize::new(0),
            next_session: AtomicU64::new(0),
        }
    }

    pub fn with_step_interval(mut self, interval: Duration) -> Self {
        self.step_interval = interval;
        self
    }

    /// Messages dropped as unparseable or out of sequence, across all sessions.
    pub fn malformed_count(&self) -> u64 {
        self.malformed.load(Ordering::Relaxed)
    }
}

/// `/ws` for sessions, `/health` for counters, and the UI bundle at `/`
/// (a placeholder page when no bundle directory is given).
pub fn router(state: Arc<AppState>, ui_dir: Option<PathBuf>) -> Router {
    let app = Router::new()
        .route("/ws", get(upgrade))
        .route("/health", get(health))
        .with_state(state);
    match ui_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.route("/", get(|| async { Html(PLACEHOLDER_PAGE) })),
    }
}

pub async fn serve(listener: TcpListener, state: Arc<AppState>, ui_dir: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(state, ui_dir)).await
}

async fn health(State(state): State<Arc<AppState>>) -> Json<serde_json::Value> {
    Json(json!({
        "protocol_version": PROTOCOL_VERSION,
        "active_sessions": state.active.load(Ordering::Relaxed),
        "malformed_messages": state.malformed_count(),
    }))
}

async fn upgrade(ws: WebSocketUpgrade, State(state): State<Arc<AppState>>) -> Response {
    ws.on_upgrade(move |socket| connection(socket, state)).into_response()
}

struct AgentRun {
    libs: Libraries,
    state: EpisodeState,
}

fn new_agent_run(state: &AppState) -> AgentRun {
    AgentRun { libs: state.libraries.clone(), state: EpisodeState::default() }
}

struct Live {
    env: ArenaEnv,
    /// Every input in arrival order; what replay will see.
    events: Vec<InputEvent>,
    recorder: Option<SessionRecorder>,
    agent: Option<AgentRun>,
    agent_drove: bool,
}

/// Executes commands and, when recording, writes each one down as the input
/// that produces it so the saved file replays.
struct Recorded<'a> {
    live: &'a mut Live,
    keymap: &'a Keymap,
}

impl Recorded<'_> {
    fn run(&mut self, cmd: AtomicCommand) -> ExecOutcome {
        let out = self.live.env.execute(cmd);
        let tick = self.live.env.tick();
        if let Some(rec) = self.live.recorder.as_mut() {
            // Only fails on a tick going backwards, which execute never does.
            let _ = rec.keyframe(tick, self.live.env.frame(), out.clone());
            let status = self.live.env.status();
            if status.is_terminal() {
                let _ = rec.end(tick, status);
            }
        }
        out
    }
}

impl Environment for Recorded<'_> {
    fn frame(&self) -> Frame {
        self.live.env.frame()
    }

    fn execute(&mut self, cmd: AtomicCommand) -> ExecOutcome {
        if let Some(mut ev) = self.keymap.code_for(cmd) {
            ev.tick = self.live.env.tick();
            self.live.events.push(ev.clone());
            if let Some(rec) = self.live.recorder.as_mut() {
                let _ = rec.event(ev);
            }
        }
        self.run(cmd)
    }

    fn status(&self) -> TaskStatus {
        self.live.env.status()
    }

    fn task(&self) -> &TaskSpec {
        self.live.env.task()
    }

    fn seed(&self) -> u64 {
        self.live.env.seed()
    }

    fn tick(&self) -> u64 {
        self.live.env.tick()
    }
}

struct Connection {
    state: Arc<AppState>,
    out_seq: u64,
    in_seq: u64,
    mode: Mode,
    paused: bool,
    live: Option<Live>,
}

enum Flow {
    Continue,
    Close(u16, String),
}

impl Connection {
    fn envelope(&mut self, body: ServerMessage) -> Message {
        self.out_seq += 1;
        let text = serde_json::to_string(&Envelope { v: PROTOCOL_VERSION, seq: self.out_seq, body })
            .expect("server messages serialize");
        Message::Text(text)
    }

    fn error(&mut self, code: ErrorCode, message: impl Into<String>) -> Message {
        self.envelope(ServerMessage::Error { code, message: message.into() })
    }

    fn frame_update(&mut self) -> Option<Message> {
        let live = self.live.as_ref()?;
        let body = ServerMessage::FrameUpdate {
            mode: self.mode,
            tick: live.env.tick(),
            status: live.env.status(),
            paused: self.paused,
            recording: live.recorder.is_some(),
            frame: live.env.frame(),
        };
        Some(self.envelope(body))
    }

    fn agent_should_step(&self) -> bool {
        self.mode == Mode::Agent
            && !self.paused
            && self.live.as_ref().is_some_and(|l| l.agent.is_some() && !l.env.status().is_terminal())
    }

    fn handle_text(&mut self, text: &str, out: &mut Vec<Message>) -> Flow {
        let msg = match decode(text) {
            Decoded::Message(m) => m,
            Decoded::WrongVersion(v) => {
                return Flow::Close(CLOSE_VERSION_MISMATCH, format!("protocol version {v} is not {PROTOCOL_VERSION}"))
            }
            Decoded::Malformed(_) => {
                self.state.malformed.fetch_add(1, Ordering::Relaxed);
                return Flow::Continue;
            }
        };
        if msg.seq <= self.in_seq {
            self.state.malformed.fetch_add(1, Ordering::Relaxed);
            return Flow::Continue;
        }
        self.in_seq = msg.seq;
        match msg.body {
            ClientMessage::Input { kind, code } => self.input(kind, &code, out),
            ClientMessage::Control { control } => self.control(control, out),
        }
        Flow::Continue
    }

    fn start(&mut self, task_id: u8, seed: u64, mode: Mode, record: bool, out: &mut Vec<Message>) {
        let env = match ArenaEnv::new(task_id, seed) {
            Ok(e) => e,
            Err(e) => return out.push(self.error(ErrorCode::Protocol, e.to_string())),
        };
        if mode == Mode::Takeover {
            return out.push(self.error(ErrorCode::Protocol, "a session cannot start in takeover"));
        }
        let recorder = record.then(|| {
            let n = self.state.next_session.fetch_add(1, Ordering::Relaxed);
            let created_at = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            SessionRecorder::new(SessionHeader {
                version: SESSION_FORMAT_VERSION,
                session_id: format!("live-{created_at}-{:04}-t{task_id:02}", n),
                task_id,
                seed,
                player_tag: "live".into(),
                clean: true,
                created_at,
            })
        });
        let agent = (mode == Mode::Agent).then(|| new_agent_run(&self.state));
        self.live = Some(Live { env, events: Vec::new(), recorder, agent, agent_drove: false });
        self.mode = mode;
        self.paused = false;
        out.extend(self.frame_update());
    }

    fn control(&mut self, control: Control, out: &mut Vec<Message>) {
        match control {
            Control::Start { task_id, seed, mode, record } => self.start(task_id, seed, mode, record, out),
            Control::Mode { mode } => {
                let Some(live) = self.live.as_mut() else {
                    return out.push(self.error(ErrorCode::Protocol, "no episode; send start first"));
                };
                match mode {
                    Mode::Takeover if live.agent.is_none() => {
                        return out.push(self.error(ErrorCode::Protocol, "takeover needs a running agent episode"));
                    }
                    Mode::Human => live.agent = None,
                    Mode::Agent if live.agent.is_none() => live.agent = Some(new_agent_run(&self.state)),
                    _ => {}
                }
                self.mode = mode;
                out.extend(self.frame_update());
            }
            Control::Pause | Control::Resume => {
                if self.live.is_none() {
                    return out.push(self.error(ErrorCode::Protocol, "no episode; send start first"));
                }
                self.paused = control == Control::Pause;
                out.extend(self.frame_update());
            }
            Control::Save => self.save(out),
        }
    }

    fn save(&mut self, out: &mut Vec<Message>) {
        let Some(live) = self.live.as_ref() else {
            return out.push(self.error(ErrorCode::Protocol, "no episode; send start first"));
        };
        let Some(rec) = live.recorder.as_ref() else {
            return out.push(self.error(ErrorCode::Protocol, "recording is off for this episode"));
        };
        let mut session = rec.session().clone();
        session.header.clean = !live.agent_drove;
        match session.save(&self.state.sessions_dir) {
            Ok(path) => out.push(self.envelope(ServerMessage::SessionSaved { path: path.display().to_string() })),
            Err(e) => out.push(self.error(ErrorCode::Protocol, e.to_string())),
        }
    }

    fn input(&mut self, kind: InputKind, code: &str, out: &mut Vec<Message>) {
        let refusal = match (&self.live, self.mode) {
            (None, _) => Some("no episode; send start first"),
            (Some(_), Mode::Agent) => Some("input is ignored while the agent drives; switch to takeover"),
            (Some(_), _) if self.paused => Some("session is paused"),
            (Some(l), _) if l.env.status().is_terminal() => Some("episode is over"),
            _ => None,
        };
        if let Some(r) = refusal {
            return out.push(self.error(ErrorCode::Protocol, r));
        }
        let keymap = &self.state.keymap;
        let live = self.live.as_mut().expect("checked above");
        let ev = InputEvent::new(live.env.tick(), kind, code);
        let before = events_to_atomics(&live.events, keymap).commands.len();
        live.events.push(ev.clone());
        if let Some(rec) = live.recorder.as_mut() {
            let _ = rec.event(ev);
        }
        // Decide through the same mapping replay uses, so bounces and
        // unbound codes are dropped here exactly as they will be there.
        let atomics = events_to_atomics(&live.events, keymap);
        if atomics.commands.len() > before {
            let cmd = *atomics.commands.last().expect("grew");
            Recorded { live, keymap }.run(cmd);
            out.extend(self.frame_update());
        }
    }

    fn agent_step(&mut self, out: &mut Vec<Message>) {
        let state = Arc::clone(&self.state);
        let live = self.live.as_mut().expect("agent_should_step checked");
        let mut run = live.agent.take().expect("agent_should_step checked");
        live.agent_drove = true;
        let result = if run.state.step >= u64::from(state.agent.step_cap) {
            Err("step cap reached".to_string())
        } else {
            let mut env = Recorded { live: &mut *live, keymap: &state.keymap };
            run_step(&mut env, &mut run.libs, state.backend.as_ref(), &state.agent, &mut run.state)
                .map(|_| ())
                .map_err(|e| e.to_string())
        };
        live.agent = Some(run);
        if let Err(why) = result {
            // The world does not end on its own here; stop stepping and say why.
            self.paused = true;
            out.push(self.error(ErrorCode::Internal, format!("agent stopped: {why}")));
        }
        out.extend(self.frame_update());
    }
}

async fn connection(mut socket: WebSocket, state: Arc<AppState>) {
    state.active.fetch_add(1, Ordering::Relaxed);
    let mut conn = Connection { state: Arc::clone(&state), out_seq: 0, in_seq: 0, mode: Mode::Human, paused: false, live: None };
    let mut out = Vec::new();
    'session: loop {
        let incoming = if conn.agent_should_step() {
            // Drain whatever the client already sent before taking another step.
            tokio::select! {
                biased;
                m = socket.recv() => Some(m),
                _ = tokio::time::sleep(state.step_interval) => None,
            }
        } else {
            Some(socket.recv().await)
        };
        match incoming {
            None => conn.agent_step(&mut out),
            Some(None) | Some(Some(Err(_))) => break,
            Some(Some(Ok(Message::Text(text)))) => {
                if let Flow::Close(code, reason) = conn.handle_text(&text, &mut out) {
                    let _ = socket.send(Message::Close(Some(CloseFrame { code, reason: reason.into() }))).await;
                    break;
                }
            }
            Some(Some(Ok(Message::Binary(_)))) => {
                state.malformed.fetch_add(1, Ordering::Relaxed);
            }
            Some(Some(Ok(Message::Close(_)))) => break,
            Some(Some(Ok(_))) => {}
        }
        for m in out.drain(..) {
            if socket.send(m).await.is_err() {
                break 'session;
            }
        }
    }
    state.active.fetch_sub(1, Ordering::Relaxed);
}
