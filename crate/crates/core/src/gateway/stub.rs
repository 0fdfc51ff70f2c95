//! A tiny HTTP/1.1 server standing in for a model provider in tests and demos.
//! Replies are scripted per request; every request body is kept for inspection.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use serde_json::{json, Value};

#[derive(Debug, Clone, PartialEq)]
pub struct RecordedRequest {
    pub path: String,
    pub authorization: Option<String>,
    pub body: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StubResponse {
    pub status: u16,
    pub body: Value,
}

impl StubResponse {
    pub fn status(status: u16) -> Self {
        Self { status, body: json!({"error": {"message": "scripted failure"}}) }
    }

    /// A chat completion whose message content is `content`.
    pub fn chat(content: &str) -> Self {
        Self {
            status: 200,
            body: json!({
                "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
                "usage": {"prompt_tokens": 100, "completion_tokens": 20},
            }),
        }
    }

    pub fn embedding(values: &[f64]) -> Self {
        Self { status: 200, body: json!({"data": [{"index": 0, "embedding": values}]}) }
    }
}

type Responder = dyn Fn(&RecordedRequest) -> StubResponse + Send + Sync;

struct Shared {
    script: Mutex<VecDeque<StubResponse>>,
    fallback: Box<Responder>,
    requests: Mutex<Vec<RecordedRequest>>,
    stop: AtomicBool,
}

pub struct StubServer {
    addr: SocketAddr,
    shared: Arc<Shared>,
    handle: Option<JoinHandle<()>>,
}

impl StubServer {
    /// Serves `script` in order, then `fallback` for every later request.
    pub fn start<F>(script: Vec<StubResponse>, fallback: F) -> std::io::Result<Self>
    where
        F: Fn(&RecordedRequest) -> StubResponse + Send + Sync + 'static,
    {
        let listener = TcpListener::bind("127.0.0.1:0")?;
        let addr = listener.local_addr()?;
        let shared = Arc::new(Shared {
            script: Mutex::new(script.into()),
            fallback: Box::new(fallback),
            requests: Mutex::new(Vec::new()),
            stop: AtomicBool::new(false),
        });
        let worker = shared.clone();
        let handle = thread::spawn(move || {
            for stream in listener.incoming() {
                if worker.stop.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(stream) = stream {
                    let _ = serve(stream, &worker);
                }
            }
        });
        Ok(Self { addr, shared, handle: Some(handle) })
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    /// Queues `response` behind whatever is already scripted.
    pub fn push(&self, response: StubResponse) {
        self.shared.script.lock().expect("stub lock").push_back(response);
    }

    pub fn requests(&self) -> Vec<RecordedRequest> {
        self.shared.requests.lock().expect("stub lock").clone()
    }
}

impl Drop for StubServer {
    fn drop(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.addr);
        if let Some(h) = self.handle.take() {
            let _ = h.join();
        }
    }
}

fn serve(stream: TcpStream, shared: &Shared) -> std::io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    if reader.read_line(&mut request_line)? == 0 {
        return Ok(());
    }
    let path = request_line.split_whitespace().nth(1).unwrap_or("/").to_string();
    let mut length = 0usize;
    let mut authorization = None;
    loop {
        let mut line = String::new();
        reader.read_line(&mut line)?;
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            match k.trim().to_ascii_lowercase().as_str() {
                "content-length" => length = v.trim().parse().unwrap_or(0),
                "authorization" => authorization = Some(v.trim().to_string()),
                _ => {}
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    let request = RecordedRequest {
        path,
        authorization,
        body: serde_json::from_slice(&body).unwrap_or(Value::Null),
    };
    let scripted = shared.script.lock().expect("stub lock").pop_front();
    let response = scripted.unwrap_or_else(|| (shared.fallback)(&request));
    shared.requests.lock().expect("stub lock").push(request);
    let payload = response.body.to_string();
    let mut stream = stream;
    write!(
        stream,
        "HTTP/1.1 {} Stub\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{}",
        response.status,
        payload.len(),
        payload
    )?;
    stream.flush()
}
