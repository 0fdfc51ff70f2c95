//! Session files: one JSON object per line. The first line is the header;
//! events and keyframes follow in tick order; an optional end line closes
//! the file.
//!
//! ```text
//! {"type":"header","version":1,"session_id":"t03-000","task_id":3,"seed":7,...}
//! {"type":"event","tick":0,"kind":"key_down","code":"KeyD"}
//! {"type":"keyframe","tick":1,"frame":{...},"outcome":{...}}
//! {"type":"end","tick":12,"status":{"status":"success"}}
//! ```
//!
//! Play is turn-gated, so replaying the mapped events against a fresh world
//! built from `(task_id, seed)` must reproduce every keyframe exactly. A file
//! without an end line was abandoned; its expected result is a timeout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use varp_arena::{render_frame, ExecOutcome, FailureReason, Frame, TaskStatus, WorldState};

use super::keymap::{events_to_atomics, InputEvent, Keymap};
use crate::agent::EpisodeResult;
use crate::error::{Result, VarpError};
use crate::memory::{HumanGuidedLibrary, HumanGuidedRecord};

pub const SESSION_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionHeader {
    pub version: u32,
    pub session_id: String,
    pub task_id: u8,
    pub seed: u64,
    pub player_tag: String,
    pub clean: bool,
    /// Unix seconds.
    pub created_at: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionLine {
    Header(SessionHeader),
    Event(InputEvent),
    Keyframe { tick: u64, frame: Frame, outcome: ExecOutcome },
    End { tick: u64, status: TaskStatus },
}

impl SessionLine {
    fn tick(&self) -> u64 {
        match self {
            SessionLine::Header(_) => 0,
            SessionLine::Event(e) => e.tick,
            SessionLine::Keyframe { tick, .. } | SessionLine::End { tick, .. } => *tick,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub header: SessionHeader,
    pub events: Vec<InputEvent>,
    pub keyframes: Vec<(u64, Frame, ExecOutcome)>,
    pub end: Option<(u64, TaskStatus)>,
}

impl Session {
    pub fn parse(text: &str) -> Result<Session> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let header = match lines.next() {
            Some((_, l)) => match serde_json::from_str(l) {
                Ok(SessionLine::Header(h)) => h,
                Ok(_) => return Err(VarpError::Load("first line is not a header".into())),
                Err(e) => return Err(VarpError::Load(format!("line 1: {e}"))),
            },
            None => return Err(VarpError::Load("empty session file".into())),
        };
        if header.version != SESSION_FORMAT_VERSION {
            return Err(VarpError::Load(format!("session format version {} is not supported", header.version)));
        }
        let mut s = Session { header, events: Vec::new(), keyframes: Vec::new(), end: None };
        let mut last_tick = 0;
        for (i, l) in lines {
            let line: SessionLine =
                serde_json::from_str(l).map_err(|e| VarpError::Load(format!("line {}: {e}", i + 1)))?;
            if s.end.is_some() {
                return Err(VarpError::Load(format!("line {}: content after the end line", i + 1)));
            }
            if line.tick() < last_tick {
                return Err(VarpError::Load(format!("line {}: tick goes backwards", i + 1)));
            }
            last_tick = line.tick();
            match line {
                SessionLine::Header(_) => return Err(VarpError::Load(format!("line {}: second header", i + 1))),
                SessionLine::Event(e) => s.events.push(e),
                SessionLine::Keyframe { tick, frame, outcome } => s.keyframes.push((tick, frame, outcome)),
                SessionLine::End { tick, status } => s.end = Some((tick, status)),
            }
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Session> {
        Session::parse(&fs::read_to_string(path)?)
    }

    /// Lines in file order: header, then events and keyframes merged by tick
    /// (events first on equal ticks), then the end line.
    pub fn lines(&self) -> Vec<SessionLine> {
        let mut out = vec![SessionLine::Header(self.header.clone())];
        let (mut e, mut k) = (0, 0);
        while e < self.events.len() || k < self.keyframes.len() {
            let take_event = match (self.events.get(e), self.keyframes.get(k)) {
                (Some(ev), Some(kf)) => ev.tick <= kf.0,
                (Some(_), None) => true,
                _ => false,
            };
            if take_event {
                out.push(SessionLine::Event(self.events[e].clone()));
                e += 1;
            } else {
                let (tick, frame, outcome) = self.keyframes[k].clone();
                out.push(SessionLine::Keyframe { tick, frame, outcome });
                k += 1;
            }
        }
        if let Some((tick, status)) = self.end {
            out.push(SessionLine::End { tick, status });
        }
        out
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for line in self.lines() {
            s.push_str(&serde_json::to_string(&line).expect("session line serializes"));
            s.push('\n');
        }
        s
    }

    /// Writes `{dir}/{session_id}.jsonl`, refusing a session id the directory
    /// already holds.
    pub fn save(&self, dir: &Path) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        for existing in session_files(dir)? {
            let first = fs::read_to_string(&existing)?.lines().next().map(str::to_string).unwrap_or_default();
            if let Ok(SessionLine::Header(h)) = serde_json::from_str::<SessionLine>(&first) {
                if h.session_id == self.header.session_id {
                    return Err(VarpError::domain(format!(
                        "session `{}` already exists in {}",
                        h.session_id,
                        dir.display()
                    )));
                }
            }
        }
        let path = dir.join(format!("{}.jsonl", self.header.session_id));
        if path.exists() {
            return Err(VarpError::domain(format!("{} already exists", path.display())));
        }
        fs::File::create(&path)?.write_all(self.to_text().as_bytes())?;
        Ok(path)
    }

    /// What replay must reproduce.
    pub fn expected_status(&self) -> TaskStatus {
        self.end.map_or(TaskStatus::Failure(FailureReason::Timeout), |(_, s)| s)
    }
}

/// Builds a session line by line, enforcing tick order.
#[derive(Debug, Clone)]
pub struct SessionRecorder {
    session: Session,
    last_tick: u64,
}

impl SessionRecorder {
    pub fn new(header: SessionHeader) -> Self {
        Self {
            session: Session { header, events: Vec::new(), keyframes: Vec::new(), end: None },
            last_tick: 0,
        }
    }

    fn advance(&mut self, tick: u64) -> Result<()> {
        if self.session.end.is_some() {
            return Err(VarpError::domain("session already ended"));
        }
        if tick < self.last_tick {
            return Err(VarpError::domain(format!("tick {tick} is before {}", self.last_tick)));
        }
        self.last_tick = tick;
        Ok(())
    }

    pub fn event(&mut self, ev: InputEvent) -> Result<()> {
        self.advance(ev.tick)?;
        self.session.events.push(ev);
        Ok(())
    }

    pub fn keyframe(&mut self, tick: u64, frame: Frame, outcome: ExecOutcome) -> Result<()> {
        self.advance(tick)?;
        self.session.keyframes.push((tick, frame, outcome));
        Ok(())
    }

    pub fn end(&mut self, tick: u64, status: TaskStatus) -> Result<()> {
        self.advance(tick)?;
        self.session.end = Some((tick, status));
        Ok(())
    }

    pub fn session(&self) -> &Session {
        &self.session
    }

    pub fn finish(self) -> Session {
        self.session
    }
}

fn session_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    Ok(files)
}

/// Every session in `dir`, sorted by file name. A missing directory is empty.
pub fn load_dataset(dir: &Path) -> Result<Vec<Session>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    session_files(dir)?.iter().map(|p| Session::load(p)).collect()
}

/// Replays the mapped inputs of `session` and checks every keyframe and the
/// terminal status. Inputs after the episode ended are ignored, as the live
/// service ignores them.
pub fn replay_session(session: &Session, keymap: &Keymap) -> Result<EpisodeResult> {
    let h = &session.header;
    let mut world = WorldState::new(varp_arena::ArenaConfig::bundled(), h.task_id, h.seed)?;
    let atomics = events_to_atomics(&session.events, keymap);
    let mut keyframes = session.keyframes.iter().peekable();
    let mut last_outcome = ExecOutcome::default();
    let mut executed = 0u64;

    let mut check = |world: &WorldState, last: &ExecOutcome| -> Result<()> {
        while let Some((tick, frame, outcome)) = keyframes.next_if(|k| k.0 <= world.tick) {
            if *tick != world.tick {
                return Err(VarpError::Integrity { tick: *tick, message: "no command boundary at this tick".into() });
            }
            if render_frame(world) != *frame {
                return Err(VarpError::Integrity { tick: *tick, message: "frame differs".into() });
            }
            if last != outcome {
                return Err(VarpError::Integrity { tick: *tick, message: "outcome differs".into() });
            }
        }
        Ok(())
    };

    check(&world, &last_outcome)?;
    for cmd in &atomics.commands {
        if world.status().is_terminal() {
            break;
        }
        last_outcome = world.execute_atomic(*cmd);
        executed += 1;
        check(&world, &last_outcome)?;
    }
    if let Some((tick, _, _)) = keyframes.next() {
        return Err(VarpError::Integrity { tick: *tick, message: "keyframe was never reached".into() });
    }
    let mut status = world.status();
    if status == TaskStatus::Ongoing && session.end.is_none() {
        status = TaskStatus::Failure(FailureReason::Timeout);
    }
    let expected = session.expected_status();
    if status != expected {
        let tick = session.end.map_or(world.tick, |(t, _)| t);
        return Err(VarpError::Integrity { tick, message: format!("replay ended {status}, recording says {expected}") });
    }
    Ok(EpisodeResult {
        status,
        ticks: world.tick,
        steps: executed,
        inference_count: 0,
        atomic_ops_count: executed,
    })
}

/// Pairs every mapped input of the clean sessions with the frame shown just
/// before it, by replaying each session.
pub fn build_guided_library(sessions: &[Session], keymap: &Keymap) -> Result<HumanGuidedLibrary> {
    let mut lib = HumanGuidedLibrary::new();
    for s in sessions.iter().filter(|s| s.header.clean) {
        let mut world = WorldState::new(varp_arena::ArenaConfig::bundled(), s.header.task_id, s.header.seed)?;
        let atomics = events_to_atomics(&s.events, keymap);
        let mut accepted = atomics.ticks.iter().zip(&atomics.commands).peekable();
        for ev in &s.events {
            if keymap.command(ev).is_none() || world.status().is_terminal() {
                continue;
            }
            let record = HumanGuidedRecord {
                session_id: s.header.session_id.clone(),
                tick: ev.tick,
                frame_snapshot: render_frame(&world),
                operation: ev.clone(),
                clean: true,
            };
            // Duplicate ticks can only come from hand-edited files; keep the first.
            let _ = lib.add(record);
            if let Some((_, cmd)) = accepted.next_if(|(t, _)| **t == ev.tick) {
                world.execute_atomic(*cmd);
            }
        }
    }
    Ok(lib)
}
