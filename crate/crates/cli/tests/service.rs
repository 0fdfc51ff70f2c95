use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use serde_json::{json, Value};
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::protocol::frame::coding::CloseCode;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{connect_async, MaybeTlsStream, WebSocketStream};
use varp_arena::TaskStatus;
use varp_cli::protocol::{schema, CLOSE_VERSION_MISMATCH};
use varp_cli::service::{serve, AppState};
use varp_core::agent::AgentConfig;
use varp_core::bench::local_libraries;
use varp_core::gateway::ScriptedOracle;
use varp_core::guidance::{replay_session, Keymap, Session};

struct Server {
    addr: std::net::SocketAddr,
    state: Arc<AppState>,
    _dir: tempfile::TempDir,
}

async fn server() -> Server {
    let dir = tempfile::tempdir().unwrap();
    let state = Arc::new(AppState::new(
        Arc::new(ScriptedOracle::new(0.02, 0.15)),
        local_libraries().unwrap(),
        AgentConfig::default(),
        dir.path().to_path_buf(),
    )
    .with_step_interval(Duration::from_millis(20)));
    let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
    let addr = listener.local_addr().unwrap();
    tokio::spawn(serve(listener, Arc::clone(&state), None));
    Server { addr, state, _dir: dir }
}

struct Client {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    seq: u64,
    last_server_seq: u64,
    validator: jsonschema::JSONSchema,
}

impl Client {
    async fn connect(s: &Server) -> Client {
        let (ws, _) = connect_async(format!("ws://{}/ws", s.addr)).await.unwrap();
        Client { ws, seq: 0, last_server_seq: 0, validator: jsonschema::JSONSchema::compile(&schema()).unwrap() }
    }

    async fn send(&mut self, mut body: Value) {
        self.seq += 1;
        body["v"] = json!(1);
        body["seq"] = json!(self.seq);
        assert!(self.validator.is_valid(&body), "client message off schema: {body}");
        self.ws.send(Message::Text(body.to_string())).await.unwrap();
    }

    async fn control(&mut self, action: &str, extra: Value) {
        let mut body = json!({"type": "control", "action": action});
        for (k, v) in extra.as_object().unwrap() {
            body[k] = v.clone();
        }
        self.send(body).await;
    }

    async fn input(&mut self, kind: &str, code: &str) {
        self.send(json!({"type": "input", "kind": kind, "code": code})).await;
    }

    async fn recv(&mut self) -> Value {
        loop {
            let m = tokio::time::timeout(Duration::from_secs(20), self.ws.next()).await.expect("server went quiet");
            match m.expect("stream ended").unwrap() {
                Message::Text(t) => {
                    let v: Value = serde_json::from_str(&t).unwrap();
                    if let Err(errors) = self.validator.validate(&v) {
                        panic!("server message off schema: {:?}\n{v}", errors.map(|e| e.to_string()).collect::<Vec<_>>());
                    }
                    let seq = v["seq"].as_u64().unwrap();
                    assert!(seq > self.last_server_seq, "server seq went backwards");
                    self.last_server_seq = seq;
                    return v;
                }
                Message::Ping(_) | Message::Pong(_) => continue,
                other => panic!("unexpected {other:?}"),
            }
        }
    }

    async fn recv_type(&mut self, ty: &str) -> Value {
        let v = self.recv().await;
        assert_eq!(v["type"], ty, "{v}");
        v
    }
}

fn status(v: &Value) -> TaskStatus {
    serde_json::from_value(v["status"].clone()).unwrap()
}

fn enemy_hp(v: &Value) -> f64 {
    v["frame"]["hud"]["enemy_bars"][0]["fraction"].as_f64().unwrap()
}

fn find(v: &Value, glyph: char) -> Option<(i64, i64)> {
    v["frame"]["viewport"].as_array()?.iter().enumerate().find_map(|(y, row)| {
        row.as_str()?.chars().position(|c| c == glyph).map(|x| (x as i64, y as i64))
    })
}

/// Walks next to the wolf; returns the last frame.
async fn approach(c: &mut Client, mut f: Value) -> Value {
    for _ in 0..60 {
        let (px, py) = find(&f, '@').unwrap();
        let (ex, ey) = find(&f, 'w').unwrap();
        let (dx, dy) = (ex - px, ey - py);
        if dx.abs() + dy.abs() <= 1 {
            return f;
        }
        let code = if dx.abs() >= dy.abs() {
            if dx > 0 { "KeyD" } else { "KeyA" }
        } else if dy > 0 {
            "KeyS"
        } else {
            "KeyW"
        };
        c.input("key_down", code).await;
        f = c.recv_type("frame_update").await;
    }
    panic!("never reached the enemy");
}

fn replays(path: &Path) -> Session {
    let s = Session::load(path).unwrap();
    let r = replay_session(&s, &Keymap::default()).unwrap();
    assert_eq!(r.status, s.expected_status());
    s
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn light_attacks_wear_the_enemy_down() {
    let s = server().await;
    let mut c = Client::connect(&s).await;
    c.control("start", json!({"task_id": 2, "seed": 11})).await;
    let first = c.recv_type("frame_update").await;
    assert_eq!(first["tick"], 0);
    assert_eq!(first["mode"], "human");
    let f = approach(&mut c, first).await;
    let mut hp = enemy_hp(&f);
    for _ in 0..3 {
        c.input("mouse_button", "MouseLeft").await;
        let f = c.recv_type("frame_update").await;
        let now = enemy_hp(&f);
        assert!(now < hp, "enemy hp {now} did not drop from {hp}");
        hp = now;
    }
}

/// Attacks the whole way; whatever the ending, the saved file must replay to it.
#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn human_session_saves_and_replays() {
    let s = server().await;
    let mut c = Client::connect(&s).await;
    c.control("start", json!({"task_id": 2, "seed": 5})).await;
    let first = c.recv_type("frame_update").await;
    let mut last = approach(&mut c, first).await;
    for i in 0..400 {
        // Unbound and release events are recorded but move nothing.
        if i % 7 == 0 {
            c.input("mouse_move", "MouseMove").await;
        }
        let code = if i % 5 == 4 { "Space" } else { "MouseLeft" };
        c.input(if code == "Space" { "key_down" } else { "mouse_button" }, code).await;
        last = c.recv_type("frame_update").await;
        if status(&last).is_terminal() {
            break;
        }
    }
    assert!(status(&last).is_terminal(), "episode never ended");
    c.input("mouse_button", "MouseLeft").await;
    c.recv_type("error").await;

    c.control("save", json!({})).await;
    let saved = c.recv_type("session_saved").await;
    let session = replays(Path::new(saved["path"].as_str().unwrap()));
    assert!(session.header.clean);
    assert_eq!(session.expected_status(), status(&last));
    assert_eq!(session.end.unwrap().0, last["tick"].as_u64().unwrap());

    c.control("save", json!({})).await;
    c.recv_type("error").await;
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn takeover_needs_an_agent_episode() {
    let s = server().await;
    let mut c = Client::connect(&s).await;
    c.control("mode", json!({"mode": "takeover"})).await;
    assert_eq!(c.recv_type("error").await["code"], "protocol");
    c.control("start", json!({"task_id": 1, "seed": 1})).await;
    c.recv_type("frame_update").await;
    c.control("mode", json!({"mode": "takeover"})).await;
    let e = c.recv_type("error").await;
    assert!(e["message"].as_str().unwrap().contains("agent"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn agent_plays_to_the_end() {
    let s = server().await;
    let mut c = Client::connect(&s).await;
    c.control("start", json!({"task_id": 1, "seed": 1000, "mode": "agent"})).await;
    let mut last = c.recv_type("frame_update").await;
    while !status(&last).is_terminal() {
        last = c.recv_type("frame_update").await;
        assert_eq!(last["mode"], "agent");
    }
    assert_eq!(status(&last), TaskStatus::Success);
    c.control("save", json!({})).await;
    let saved = c.recv_type("session_saved").await;
    let session = replays(Path::new(saved["path"].as_str().unwrap()));
    assert!(!session.header.clean, "agent sessions are not demonstrations");
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn takeover_routes_human_input() {
    let s = server().await;
    let mut c = Client::connect(&s).await;
    c.control("start", json!({"task_id": 10, "seed": 1000, "mode": "agent"})).await;
    c.recv_type("frame_update").await;
    // One agent step, then take over.
    c.recv_type("frame_update").await;
    c.control("mode", json!({"mode": "takeover"})).await;
    // Agent steps already queued may arrive first.
    let mut f = c.recv_type("frame_update").await;
    while f["mode"] != "takeover" {
        f = c.recv_type("frame_update").await;
    }
    let tick = f["tick"].as_u64().unwrap();
    c.input("key_down", "Space").await;
    let after = c.recv_type("frame_update").await;
    assert_eq!(after["mode"], "takeover");
    assert_eq!(after["tick"].as_u64().unwrap(), tick + 2, "dodge costs two ticks");

    c.control("mode", json!({"mode": "agent"})).await;
    let mut last = c.recv_type("frame_update").await;
    while !status(&last).is_terminal() {
        last = c.recv_type("frame_update").await;
    }
    c.control("save", json!({})).await;
    let saved = c.recv_type("session_saved").await;
    let session = replays(Path::new(saved["path"].as_str().unwrap()));
    assert!(session.events.iter().any(|e| e.code == "Space" && e.tick == tick));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn pause_stops_input_and_agent() {
    let s = server().await;
    let mut c = Client::connect(&s).await;
    c.control("start", json!({"task_id": 2, "seed": 3})).await;
    c.recv_type("frame_update").await;
    c.control("pause", json!({})).await;
    assert_eq!(c.recv_type("frame_update").await["paused"], true);
    c.input("key_down", "KeyD").await;
    c.recv_type("error").await;
    c.control("resume", json!({})).await;
    assert_eq!(c.recv_type("frame_update").await["paused"], false);
    c.input("key_down", "KeyD").await;
    assert_eq!(c.recv_type("frame_update").await["tick"], 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn wrong_version_closes_the_socket() {
    let s = server().await;
    let mut c = Client::connect(&s).await;
    c.ws.send(Message::Text(json!({"v": 2, "seq": 1, "type": "control", "action": "pause"}).to_string())).await.unwrap();
    match c.ws.next().await {
        Some(Ok(Message::Close(Some(frame)))) => assert_eq!(frame.code, CloseCode::from(CLOSE_VERSION_MISMATCH)),
        other => panic!("expected a close frame, got {other:?}"),
    }
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn malformed_messages_are_counted_and_skipped() {
    let s = server().await;
    let mut c = Client::connect(&s).await;
    let before = s.state.malformed_count();
    c.ws.send(Message::Text("{oops".into())).await.unwrap();
    c.ws.send(Message::Text(json!({"v": 1, "seq": 1, "type": "dance"}).to_string())).await.unwrap();
    c.control("start", json!({"task_id": 2, "seed": 3})).await;
    c.recv_type("frame_update").await;
    // A repeated sequence number is dropped too.
    c.ws.send(Message::Text(json!({"v": 1, "seq": 1, "type": "input", "kind": "key_down", "code": "KeyD"}).to_string()))
        .await
        .unwrap();
    c.seq = 1;
    c.input("key_down", "KeyD").await;
    assert_eq!(c.recv_type("frame_update").await["tick"], 1);
    assert_eq!(s.state.malformed_count() - before, 3);

    let addr = s.addr;
    let health: Value = tokio::task::spawn_blocking(move || {
        let mut stream = std::net::TcpStream::connect(addr).unwrap();
        stream.write_all(b"GET /health HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
        let mut text = String::new();
        stream.read_to_string(&mut text).unwrap();
        serde_json::from_str(text.split("\r\n\r\n").nth(1).unwrap()).unwrap()
    })
    .await
    .unwrap();
    assert_eq!(health["malformed_messages"], 3);
    assert_eq!(health["active_sessions"], 1);
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn placeholder_page_is_served() {
    let s = server().await;
    let addr = s.addr;
    let page = tokio::task::spawn_blocking(move || {
        let mut stream = std::net::TcpStream::connect(addr).unwrap();
        stream.write_all(b"GET / HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n").unwrap();
        let mut text = String::new();
        stream.read_to_string(&mut text).unwrap();
        text
    })
    .await
    .unwrap();
    assert!(page.starts_with("HTTP/1.1 200"));
    assert!(page.contains("new WebSocket"));
}

#[tokio::test(flavor = "multi_thread", worker_threads = 2)]
async fn sessions_are_isolated() {
    let s = server().await;
    let mut a = Client::connect(&s).await;
    let mut b = Client::connect(&s).await;
    a.control("start", json!({"task_id": 2, "seed": 3})).await;
    b.control("start", json!({"task_id": 2, "seed": 3})).await;
    a.recv_type("frame_update").await;
    b.recv_type("frame_update").await;
    a.input("key_down", "KeyD").await;
    assert_eq!(a.recv_type("frame_update").await["tick"], 1);
    b.input("key_down", "Space").await;
    assert_eq!(b.recv_type("frame_update").await["tick"], 2);
}
