//! The decision loop: read the frame, reflect on the last action, infer the
//! current task, pull candidate actions from the library, decide, execute,
//! and write everything down.

mod env;
mod executor;
mod pipeline;
mod predefined;

use serde::{Deserialize, Serialize};
use varp_arena::{Archetype, ExecOutcome, TaskStatus, Vec2};

pub use env::{ArenaEnv, Environment};
pub use executor::{execute_action, Execution, Interrupt};
pub use pipeline::{
    decide, gather_information, infer_task, run_episode, run_step, self_reflect, EpisodeState, Libraries,
};
pub use predefined::{
    predefined_actions, seed_library, FALLBACK_ACTION, HEAL_ACTION, SPELL_ACTION,
};

use crate::memory::{DEFAULT_K, DEFAULT_M, DEFAULT_N};
use crate::par::Exec;
use crate::soag::{OptimizeConfig, SoagUpdate};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Enemy,
    Item,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entity {
    pub kind: EntityKind,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub archetype: Option<Archetype>,
    /// Pixel box in the raster frame: x, y, width, height.
    pub bbox: [u32; 4],
    pub cell: Vec2,
    /// What the entity is visibly doing, when it winds up an attack.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action_description: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HudReading {
    pub hp_fraction: f64,
    pub heal_charges: u8,
    pub heavy_charge: u8,
    pub spell_ready: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatheredInfo {
    pub notices: Vec<String>,
    pub entities: Vec<Entity>,
    pub hud_reading: HudReading,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReflectionVerdict {
    pub last_action_succeeded: bool,
    pub task_complete: bool,
    pub failure_reason: Option<String>,
}

impl ReflectionVerdict {
    pub fn first_step() -> Self {
        Self { last_action_succeeded: true, task_complete: false, failure_reason: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemyReport {
    pub archetype: String,
    pub hp_estimate: f64,
    pub position: Option<[i32; 2]>,
    pub action_description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombatMode {
    Light,
    Heavy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubmoduleReport {
    pub enemy: EnemyReport,
    pub combat_mode: CombatMode,
    pub heal_now: bool,
    pub cast_spell_now: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub chosen: String,
    pub rationale: String,
    /// Priority overrides applied, in order: `heal`, `spell`, `fallback`.
    pub overrides: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub report: Option<SubmoduleReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentConfig {
    pub soag_enabled: bool,
    pub dtsa_enabled: bool,
    pub human_guidance_enabled: bool,
    /// Candidate actions per decision.
    pub k: usize,
    /// Frames shown to self reflection.
    pub m: usize,
    /// Human-guided records following the anchor.
    pub n: usize,
    pub step_cap: u32,
    /// Extra attempts after an unparseable reply.
    pub reask_budget: u32,
    pub optimize: OptimizeConfig,
    /// Optimisation steps taken each time an exchange with a known move ends.
    pub optimize_steps_per_exchange: usize,
    pub exec: Exec,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            soag_enabled: true,
            dtsa_enabled: true,
            human_guidance_enabled: true,
            k: DEFAULT_K,
            m: DEFAULT_M,
            n: DEFAULT_N,
            step_cap: 200,
            reask_budget: 2,
            optimize: OptimizeConfig::default(),
            optimize_steps_per_exchange: 1,
            exec: Exec::Sequential,
        }
    }
}

impl AgentConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        if self.step_cap == 0 {
            return Err(crate::error::VarpError::domain("step_cap must be at least 1"));
        }
        if self.k == 0 {
            return Err(crate::error::VarpError::domain("k must be at least 1"));
        }
        if self.optimize.lambda.is_nan() || self.optimize.lambda <= 0.0 {
            return Err(crate::error::VarpError::domain("lambda must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub step_index: u64,
    /// Nothing ran because the task had already ended.
    pub noop: bool,
    pub task_description: String,
    pub decision: Option<Decision>,
    pub outcome: ExecOutcome,
    pub status: TaskStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub soag: Option<SoagUpdate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub guided_action: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub status: TaskStatus,
    pub ticks: u64,
    pub steps: u64,
    pub inference_count: u64,
    pub atomic_ops_count: u64,
}
