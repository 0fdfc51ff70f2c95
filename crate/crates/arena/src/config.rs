//! Tuning constants, enemy definitions, and task maps, loaded from a
//! versioned TOML file. The bundled default lives in `assets/arena.toml`.
//!
//! Map legend (one character per cell):
//!
//! | char | meaning                                             |
//! |------|-----------------------------------------------------|
//! | `.`  | floor                                               |
//! | `#`  | rock, visible and impassable                        |
//! | `T`  | tree, visible and impassable                        |
//! | `~`  | water, visible and impassable                       |
//! | `x`  | invisible wall: drawn as floor, every edge blocked  |
//! | `@`  | player spawn candidate (seed picks one)             |
//! | `E`  | spawn of the task's enemy                           |
//! | `G`  | dormant goal enemy (navigation tasks)               |
//! | `*`  | gatherable item                                     |
//! | `$`  | closed chest (impassable)                           |

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::command::AtomicCommand;
use crate::error::ArenaError;
use crate::geometry::Vec2;
use crate::pattern::{Archetype, AttackPattern};
use crate::task::{Difficulty, TaskKind, TaskSpec};

pub const CONFIG_VERSION: u32 = 1;

const DEFAULT_CONFIG: &str = include_str!("../assets/arena.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandCosts {
    pub light_attack: u64,
    pub heavy_attack: u64,
    pub dodge: u64,
    pub restore_health: u64,
    pub cast_immobilize: u64,
    pub move_step: u64,
    pub interact: u64,
}

impl CommandCosts {
    pub fn of(&self, cmd: AtomicCommand) -> u64 {
        match cmd {
            AtomicCommand::LightAttack => self.light_attack,
            AtomicCommand::HeavyAttack => self.heavy_attack,
            AtomicCommand::Dodge => self.dodge,
            AtomicCommand::RestoreHealth => self.restore_health,
            AtomicCommand::CastImmobilize => self.cast_immobilize,
            AtomicCommand::Move(_) => self.move_step,
            AtomicCommand::Interact => self.interact,
        }
    }

    pub fn max(&self) -> u64 {
        [
            self.light_attack,
            self.heavy_attack,
            self.dodge,
            self.restore_health,
            self.cast_immobilize,
            self.move_step,
            self.interact,
        ]
        .into_iter()
        .max()
        .unwrap_or(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tuning {
    pub player_max_hp: u32,
    pub heal_amount: u32,
    pub heal_charges: u8,
    pub max_heal_charges: u8,
    pub light_damage: u32,
    pub heavy_damage: u32,
    pub light_hits_per_heavy_charge: u32,
    pub max_heavy_charge: u8,
    pub immobilize_freeze_ticks: u64,
    pub immobilize_cooldown_ticks: u64,
    pub immobilize_range: u32,
    pub aggro_range: u32,
    pub enemy_move_interval: u64,
    pub viewport_width: usize,
    pub viewport_height: usize,
    pub costs: CommandCosts,
}

/// An attack pattern plus the presentation data the renderer and the
/// perception layer share.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternDef {
    #[serde(flatten)]
    pub pattern: AttackPattern,
    /// Short slug describing the visible cue, e.g. `raise_weapon`.
    pub cue: String,
    /// What the wind-up looks like, in words.
    pub description: String,
    /// Telegraph symbol drawn next to the enemy during the wind-up.
    pub symbol: char,
    pub weight: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchetypeDef {
    pub archetype: Archetype,
    pub glyph: char,
    pub hp: u32,
    /// Inclusive range of idle ticks between patterns.
    pub idle_ticks: [u64; 2],
    /// Chance per command boundary that an idle, adjacent enemy starts a pattern.
    pub attack_chance: f64,
    pub patterns: Vec<PatternDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskDef {
    pub id: u8,
    pub name: String,
    pub description: String,
    pub difficulty: Difficulty,
    pub kind: TaskKind,
    pub tick_budget: u64,
    pub enemy: Option<Archetype>,
    pub map: String,
}

impl TaskDef {
    pub fn spec(&self) -> TaskSpec {
        TaskSpec {
            task_id: self.id,
            name: self.name.clone(),
            description: self.description.clone(),
            difficulty: self.difficulty,
            kind: self.kind,
            tick_budget: self.tick_budget,
            enemy: self.enemy,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ItemKind {
    Gatherable,
    Chest,
}

/// A parsed task map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MapLayout {
    pub width: i32,
    pub height: i32,
    pub spawns: Vec<Vec2>,
    pub enemy_spawns: Vec<Vec2>,
    pub goal: Option<Vec2>,
    pub items: Vec<(Vec2, ItemKind)>,
    pub obstacles: BTreeMap<Vec2, char>,
    pub invisible: BTreeSet<Vec2>,
}

impl MapLayout {
    pub fn parse(text: &str) -> Result<Self, ArenaError> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty())
            .collect();
        if rows.is_empty() {
            return Err(ArenaError::Config("empty map".into()));
        }
        let width = rows[0].chars().count();
        if rows.iter().any(|r| r.chars().count() != width) {
            return Err(ArenaError::Config("map rows differ in width".into()));
        }
        let mut layout = MapLayout {
            width: width as i32,
            height: rows.len() as i32,
            spawns: Vec::new(),
            enemy_spawns: Vec::new(),
            goal: None,
            items: Vec::new(),
            obstacles: BTreeMap::new(),
            invisible: BTreeSet::new(),
        };
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                let p = Vec2::new(x as i32, y as i32);
                match ch {
                    '.' => {}
                    '#' | 'T' | '~' => {
                        layout.obstacles.insert(p, ch);
                    }
                    'x' => {
                        layout.invisible.insert(p);
                    }
                    '@' => layout.spawns.push(p),
                    'E' => layout.enemy_spawns.push(p),
                    'G' => {
                        if layout.goal.replace(p).is_some() {
                            return Err(ArenaError::Config("more than one goal `G`".into()));
                        }
                    }
                    '*' => layout.items.push((p, ItemKind::Gatherable)),
                    '$' => layout.items.push((p, ItemKind::Chest)),
                    other => {
                        return Err(ArenaError::Config(format!(
                            "unknown map character `{other}` at {p}"
                        )))
                    }
                }
            }
        }
        if layout.spawns.is_empty() {
            return Err(ArenaError::Config("map has no player spawn `@`".into()));
        }
        Ok(layout)
    }

    pub fn in_bounds(&self, p: Vec2) -> bool {
        p.x >= 0 && p.y >= 0 && p.x < self.width && p.y < self.height
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArenaConfig {
    pub version: u32,
    pub tuning: Tuning,
    pub archetypes: Vec<ArchetypeDef>,
    pub tasks: Vec<TaskDef>,
}

impl ArenaConfig {
    pub fn from_toml(text: &str) -> Result<Self, ArenaError> {
        let cfg: ArenaConfig =
            toml::from_str(text).map_err(|e| ArenaError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ArenaError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ArenaError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// The bundled configuration, parsed once per process.
    pub fn bundled() -> Arc<ArenaConfig> {
        static DEFAULT: OnceLock<Arc<ArenaConfig>> = OnceLock::new();
        DEFAULT
            .get_or_init(|| {
                Arc::new(ArenaConfig::from_toml(DEFAULT_CONFIG).expect("bundled arena config"))
            })
            .clone()
    }

    pub fn bundled_text() -> &'static str {
        DEFAULT_CONFIG
    }

    pub fn task(&self, id: u8) -> Option<&TaskDef> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn archetype(&self, a: Archetype) -> Option<&ArchetypeDef> {
        self.archetypes.iter().find(|d| d.archetype == a)
    }

    pub fn pattern(&self, a: Archetype, label: &str) -> Option<&PatternDef> {
        self.archetype(a)?
            .patterns
            .iter()
            .find(|p| p.pattern.label == label)
    }

    fn validate(&self) -> Result<(), ArenaError> {
        if self.version != CONFIG_VERSION {
            return Err(ArenaError::Config(format!(
                "config version {} unsupported (expected {CONFIG_VERSION})",
                self.version
            )));
        }
        let mut ids: Vec<u8> = self.tasks.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        if ids != (1..=12).collect::<Vec<u8>>() {
            return Err(ArenaError::Config("tasks must be exactly ids 1..=12".into()));
        }
        let mut symbols = BTreeSet::new();
        let mut glyphs = BTreeSet::new();
        for def in &self.archetypes {
            if !glyphs.insert(def.glyph) {
                return Err(ArenaError::Config(format!("duplicate glyph `{}`", def.glyph)));
            }
            if def.idle_ticks[0] > def.idle_ticks[1] {
                return Err(ArenaError::Config(format!("{}: idle range reversed", def.archetype)));
            }
            if def.patterns.is_empty() {
                return Err(ArenaError::Config(format!("{}: no patterns", def.archetype)));
            }
            for p in &def.patterns {
                p.pattern.validate()?;
                if !symbols.insert(p.symbol) {
                    return Err(ArenaError::Config(format!(
                        "duplicate telegraph symbol `{}`",
                        p.symbol
                    )));
                }
                if p.pattern.hit_count() > 9 {
                    return Err(ArenaError::Config("at most 9 hits per pattern".into()));
                }
            }
        }
        for task in &self.tasks {
            let layout = MapLayout::parse(&task.map)
                .map_err(|e| ArenaError::Config(format!("task {}: {e}", task.id)))?;
            if let Some(a) = task.enemy {
                if self.archetype(a).is_none() {
                    return Err(ArenaError::Config(format!("task {}: unknown enemy", task.id)));
                }
            }
            match task.kind {
                TaskKind::Combat if layout.enemy_spawns.is_empty() || task.enemy.is_none() => {
                    return Err(ArenaError::Config(format!("task {}: combat needs `E`", task.id)))
                }
                TaskKind::Navigate if layout.goal.is_none() || task.enemy.is_none() => {
                    return Err(ArenaError::Config(format!("task {}: navigation needs `G`", task.id)))
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_config_is_valid() {
        let cfg = ArenaConfig::bundled();
        assert_eq!(cfg.tasks.len(), 12);
        assert_eq!(cfg.tuning.player_max_hp, 100);
        assert_eq!(cfg.tuning.light_damage, 8);
        assert_eq!(cfg.tuning.costs.heavy_attack, 6);
    }

    #[test]
    fn map_parse_rejects_ragged_rows() {
        assert!(MapLayout::parse("@..\n..").is_err());
        assert!(MapLayout::parse("...\n...").is_err());
        let m = MapLayout::parse("@.x\n*#$").unwrap();
        assert_eq!(m.width, 3);
        assert_eq!(m.invisible.len(), 1);
        assert_eq!(m.items.len(), 2);
        assert_eq!(m.obstacles.get(&Vec2::new(1, 1)), Some(&'#'));
    }

    #[test]
    fn version_mismatch_rejected() {
        let text = ArenaConfig::bundled_text().replacen("version = 1", "version = 7", 1);
        assert!(matches!(ArenaConfig::from_toml(&text), Err(ArenaError::Config(_))));
    }
}
