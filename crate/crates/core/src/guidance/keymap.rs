use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use varp_arena::config::CommandCosts;
use varp_arena::{ArenaConfig, AtomicCommand, Direction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    KeyDown,
    KeyUp,
    MouseButton,
    MouseMove,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputEvent {
    pub tick: u64,
    pub kind: InputKind,
    pub code: String,
}

impl InputEvent {
    pub fn new(tick: u64, kind: InputKind, code: &str) -> Self {
        Self { tick, kind, code: code.to_string() }
    }
}

/// Device codes to commands. Codes follow browser `KeyboardEvent.code` names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Keymap {
    pub keys: BTreeMap<String, AtomicCommand>,
    pub buttons: BTreeMap<String, AtomicCommand>,
    pub costs: CommandCosts,
}

impl Default for Keymap {
    fn default() -> Self {
        let keys = [
            ("KeyW", AtomicCommand::Move(Direction::N)),
            ("KeyA", AtomicCommand::Move(Direction::W)),
            ("KeyS", AtomicCommand::Move(Direction::S)),
            ("KeyD", AtomicCommand::Move(Direction::E)),
            ("KeyK", AtomicCommand::HeavyAttack),
            ("Space", AtomicCommand::Dodge),
            ("KeyR", AtomicCommand::RestoreHealth),
            ("Digit1", AtomicCommand::CastImmobilize),
            ("KeyE", AtomicCommand::Interact),
        ];
        Self {
            keys: keys.iter().map(|(k, c)| (k.to_string(), *c)).collect(),
            buttons: [("MouseLeft".to_string(), AtomicCommand::LightAttack)].into(),
            costs: ArenaConfig::bundled().tuning.costs.clone(),
        }
    }
}

impl Keymap {
    pub fn command(&self, ev: &InputEvent) -> Option<AtomicCommand> {
        match ev.kind {
            InputKind::KeyDown => self.keys.get(&ev.code).copied(),
            InputKind::MouseButton => self.buttons.get(&ev.code).copied(),
            InputKind::KeyUp | InputKind::MouseMove => None,
        }
    }

    /// The code a recorder would emit for `cmd`.
    pub fn code_for(&self, cmd: AtomicCommand) -> Option<InputEvent> {
        if let Some((code, _)) = self.buttons.iter().find(|(_, c)| **c == cmd) {
            return Some(InputEvent::new(0, InputKind::MouseButton, code));
        }
        self.keys
            .iter()
            .find(|(_, c)| **c == cmd)
            .map(|(code, _)| InputEvent::new(0, InputKind::KeyDown, code))
    }

    /// A repeat of the same code closer than this is a bounce, not a new press.
    pub fn collapse_window(&self, cmd: AtomicCommand) -> u64 {
        self.costs.of(cmd).min(2)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atomics {
    pub commands: Vec<AtomicCommand>,
    /// Events that map to no command (releases, pointer motion, unbound codes).
    pub dropped: usize,
    /// Repeats folded into the press before them.
    pub collapsed: usize,
    /// Tick of the event that produced each command.
    pub ticks: Vec<u64>,
}

pub fn events_to_atomics(events: &[InputEvent], keymap: &Keymap) -> Atomics {
    let mut out = Atomics::default();
    let mut last: Option<(&str, u64, AtomicCommand)> = None;
    for ev in events {
        let Some(cmd) = keymap.command(ev) else {
            out.dropped += 1;
            continue;
        };
        if let Some((code, tick, prev)) = last {
            if code == ev.code && ev.tick.saturating_sub(tick) < keymap.collapse_window(prev) {
                out.collapsed += 1;
                continue;
            }
        }
        last = Some((&ev.code, ev.tick, cmd));
        out.commands.push(cmd);
        out.ticks.push(ev.tick);
    }
    out
}
