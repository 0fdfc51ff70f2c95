use std::collections::BTreeMap;
use std::path::Path;

use serde_json::Value;
use varp_arena::{AtomicCommand, Direction};
use varp_core::guidance::{InputEvent, InputKind};

/// Session totals read straight off the header lines: (total, clean, per task).
pub fn hand_counts(dir: &Path) -> (usize, usize, BTreeMap<u8, usize>) {
    let mut per_task: BTreeMap<u8, usize> = BTreeMap::new();
    let (mut total, mut clean) = (0, 0);
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("jsonl") {
            continue;
        }
        let text = std::fs::read_to_string(&path).unwrap();
        let header: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(header["type"], "header");
        total += 1;
        if header["clean"] == true {
            clean += 1;
        }
        *per_task.entry(header["task_id"].as_u64().unwrap() as u8).or_default() += 1;
    }
    (total, clean, per_task)
}

/// The key-to-command rule written out longhand.
pub fn expected_commands(events: &[InputEvent]) -> Vec<AtomicCommand> {
    let cost = |c: AtomicCommand| match c {
        AtomicCommand::LightAttack => 3,
        AtomicCommand::HeavyAttack => 6,
        AtomicCommand::Dodge => 2,
        AtomicCommand::RestoreHealth => 4,
        AtomicCommand::CastImmobilize => 2,
        AtomicCommand::Move(_) => 1,
        AtomicCommand::Interact => 2,
    };
    let mut out = Vec::new();
    let mut last: Option<(String, u64, AtomicCommand)> = None;
    for ev in events {
        let cmd = match (ev.kind, ev.code.as_str()) {
            (InputKind::KeyDown, "KeyW") => AtomicCommand::Move(Direction::N),
            (InputKind::KeyDown, "KeyA") => AtomicCommand::Move(Direction::W),
            (InputKind::KeyDown, "KeyS") => AtomicCommand::Move(Direction::S),
            (InputKind::KeyDown, "KeyD") => AtomicCommand::Move(Direction::E),
            (InputKind::KeyDown, "KeyK") => AtomicCommand::HeavyAttack,
            (InputKind::KeyDown, "Space") => AtomicCommand::Dodge,
            (InputKind::KeyDown, "KeyR") => AtomicCommand::RestoreHealth,
            (InputKind::KeyDown, "Digit1") => AtomicCommand::CastImmobilize,
            (InputKind::KeyDown, "KeyE") => AtomicCommand::Interact,
            (InputKind::MouseButton, "MouseLeft") => AtomicCommand::LightAttack,
            _ => continue,
        };
        if let Some((code, t, prev)) = &last {
            if *code == ev.code && ev.tick - t < cost(*prev).min(2) {
                continue;
            }
        }
        last = Some((ev.code.clone(), ev.tick, cmd));
        out.push(cmd);
    }
    out
}

