//! What happened while commands executed.

use serde::{Deserialize, Serialize};

use crate::command::AtomicCommand;
use crate::geometry::Vec2;
use crate::pattern::Archetype;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event {
    HitLanded { tick: u64, target: Archetype, damage: u32, heavy: bool },
    Whiff { tick: u64 },
    NoOp { tick: u64, command: AtomicCommand, reason: String },
    Moved { tick: u64, to: Vec2 },
    Blocked { tick: u64 },
    Healed { tick: u64, amount: u32 },
    Immobilized { tick: u64, target: Archetype },
    Gathered { tick: u64 },
    ChestOpened { tick: u64 },
    PatternStart { tick: u64, archetype: Archetype, label: String },
    /// An enemy strike reached the player's cell. `phase` is ticks since the
    /// telegraph began; `damage` is the hp removed, or the nominal damage when evaded.
    EnemyHit { tick: u64, archetype: Archetype, label: String, phase: u64, damage: u32, evaded: bool },
    PatternEnd { tick: u64, archetype: Archetype, label: String, duration: u64 },
    PatternCancelled { tick: u64, archetype: Archetype, label: String },
    EnemyDefeated { tick: u64, archetype: Archetype },
    PlayerKilled { tick: u64 },
    GoalReached { tick: u64 },
}

/// Aggregate effect of one or more executed commands.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecOutcome {
    pub ticks_elapsed: u64,
    pub commands_executed: u32,
    pub hp_lost: u32,
    pub damage_dealt: u32,
    pub hits_landed: u32,
    pub hits_evaded: u32,
    pub hits_taken: u32,
    pub events: Vec<Event>,
}

/// Outcome of a single command.
pub type AtomicOutcome = ExecOutcome;

impl ExecOutcome {
    pub fn absorb(&mut self, other: ExecOutcome) {
        self.ticks_elapsed += other.ticks_elapsed;
        self.commands_executed += other.commands_executed;
        self.hp_lost += other.hp_lost;
        self.damage_dealt += other.damage_dealt;
        self.hits_landed += other.hits_landed;
        self.hits_evaded += other.hits_evaded;
        self.hits_taken += other.hits_taken;
        self.events.extend(other.events);
    }

    /// True when the commands changed something other than the clock.
    pub fn made_progress(&self) -> bool {
        self.events.iter().any(|e| {
            matches!(
                e,
                Event::Moved { .. }
                    | Event::Healed { .. }
                    | Event::Immobilized { .. }
                    | Event::Gathered { .. }
                    | Event::ChestOpened { .. }
                    | Event::GoalReached { .. }
                    | Event::EnemyDefeated { .. }
            )
        })
    }
}
