//! A small deterministic action-RPG arena.
//!
//! Worlds are built from `(task_id, seed)` and only advance while atomic
//! commands execute. Agents observe the world through [`Frame`]s, either as
//! text or as a PNG raster.

pub mod command;
pub mod config;
pub mod error;
pub mod frame;
pub mod geometry;
pub mod outcome;
pub mod pattern;
pub mod task;
pub mod world;

pub use command::{ActionSequence, AtomicCommand, MAX_SEQUENCE_LEN};
pub use config::{ArchetypeDef, ArenaConfig, ItemKind, MapLayout, PatternDef, TaskDef, Tuning};
pub use error::ArenaError;
pub use frame::{render_frame, EnemyBar, Frame, Hud, Legend, TelegraphInfo, TASK_COMPLETE_NOTICE};
pub use geometry::{Direction, Vec2};
pub use outcome::{AtomicOutcome, Event, ExecOutcome};
pub use pattern::{Archetype, AttackPattern, HitWindow};
pub use task::{Difficulty, FailureReason, TaskKind, TaskSpec, TaskStatus};
pub use world::{
    execute_atomic, execute_sequence, new_world, task_status, EnemyState, Item, PlayerState, WorldState,
};
