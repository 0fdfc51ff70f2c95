//! World state and the tick loop.
//!
//! Time only advances while commands execute. Within a command the player's
//! effect for a tick resolves before enemies act on that tick. Enemies choose
//! new attack patterns only at command boundaries, so every telegraph is
//! first visible to an observer at phase 0.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::command::{ActionSequence, AtomicCommand};
use crate::config::{ArchetypeDef, ArenaConfig, ItemKind, MapLayout, PatternDef};
use crate::error::ArenaError;
use crate::geometry::{Direction, Vec2};
use crate::outcome::{AtomicOutcome, Event, ExecOutcome};
use crate::pattern::{Archetype, AttackPattern};
use crate::task::{FailureReason, TaskKind, TaskSpec, TaskStatus};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerState {
    pub hp: u32,
    pub max_hp: u32,
    pub heal_charges: u8,
    pub heavy_charge: u8,
    pub immobilize_ready_at: u64,
    pub position: Vec2,
    pub facing: Direction,
    /// First tick at which the player is hittable again.
    pub invulnerable_until: u64,
    /// Light hits landed since the last heavy charge was granted.
    pub light_hits_banked: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivePattern {
    /// Index into the archetype's pattern list.
    pub index: usize,
    /// Phase of the next tick to be processed.
    pub phase_tick: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnemyState {
    pub archetype: Archetype,
    pub hp: u32,
    pub max_hp: u32,
    pub position: Vec2,
    pub active_pattern: Option<ActivePattern>,
    pub frozen_until: u64,
    pub idle_until: u64,
    pub next_move_at: u64,
    pub engaged: bool,
    /// Dormant enemies never move or attack (navigation goals).
    pub dormant: bool,
    /// Set once a rollout pattern has finished: the enemy can no longer be struck.
    pub disengaged: bool,
}

impl EnemyState {
    pub fn alive(&self) -> bool {
        self.hp > 0
    }

    fn targetable(&self) -> bool {
        self.alive() && !self.disengaged
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Item {
    pub position: Vec2,
    pub kind: ItemKind,
    /// Gathered, or opened for chests.
    pub taken: bool,
}

/// An impassable boundary between two orthogonally adjacent cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge(Vec2, Vec2);

impl Edge {
    pub fn between(a: Vec2, b: Vec2) -> Self {
        if a <= b {
            Edge(a, b)
        } else {
            Edge(b, a)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    #[serde(skip, default = "ArenaConfig::bundled")]
    config: Arc<ArenaConfig>,
    pub tick: u64,
    pub seed: u64,
    pub task: TaskSpec,
    pub player: PlayerState,
    pub enemies: Vec<EnemyState>,
    pub items: Vec<Item>,
    pub walls: BTreeSet<Edge>,
    pub obstacles: BTreeMap<Vec2, char>,
    pub width: i32,
    pub height: i32,
    /// Notices raised by the most recent command.
    pub notices: Vec<String>,
    rng_state: ChaCha8Rng,
    rollout: bool,
}

/// Fresh world for `task_id` using the bundled configuration.
pub fn new_world(task_id: u8, seed: u64) -> Result<WorldState, ArenaError> {
    WorldState::new(ArenaConfig::bundled(), task_id, seed)
}

pub fn execute_atomic(world: &mut WorldState, cmd: AtomicCommand) -> AtomicOutcome {
    world.execute_atomic(cmd)
}

pub fn execute_sequence(world: &mut WorldState, seq: &ActionSequence) -> ExecOutcome {
    world.execute_sequence(seq)
}

pub fn task_status(world: &WorldState) -> TaskStatus {
    world.status()
}

impl WorldState {
    pub fn new(config: Arc<ArenaConfig>, task_id: u8, seed: u64) -> Result<Self, ArenaError> {
        let def = config.task(task_id).ok_or(ArenaError::UnknownTask(task_id))?.clone();
        let layout = MapLayout::parse(&def.map)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (u64::from(task_id) << 56));
        let spawn = layout.spawns[rng.gen_range(0..layout.spawns.len())];
        let t = &config.tuning;
        let player = PlayerState {
            hp: t.player_max_hp,
            max_hp: t.player_max_hp,
            heal_charges: t.heal_charges,
            heavy_charge: 0,
            immobilize_ready_at: 0,
            position: spawn,
            facing: Direction::N,
            invulnerable_until: 0,
            light_hits_banked: 0,
        };
        let mut enemies = Vec::new();
        if let Some(archetype) = def.enemy {
            let adef = config
                .archetype(archetype)
                .ok_or_else(|| ArenaError::Config(format!("no archetype {archetype}")))?;
            let spawns: Vec<(Vec2, bool)> = layout
                .enemy_spawns
                .iter()
                .map(|p| (*p, false))
                .chain(layout.goal.map(|g| (g, true)))
                .collect();
            for (pos, dormant) in spawns {
                let idle = rng.gen_range(adef.idle_ticks[0]..=adef.idle_ticks[1]);
                enemies.push(EnemyState {
                    archetype,
                    hp: adef.hp,
                    max_hp: adef.hp,
                    position: pos,
                    active_pattern: None,
                    frozen_until: 0,
                    idle_until: idle,
                    next_move_at: 0,
                    engaged: false,
                    dormant,
                    disengaged: false,
                });
            }
        }
        let mut walls = BTreeSet::new();
        for cell in &layout.invisible {
            for d in Direction::ALL {
                walls.insert(Edge::between(*cell, cell.step(d)));
            }
        }
        let items = layout
            .items
            .iter()
            .map(|(p, k)| Item { position: *p, kind: *k, taken: false })
            .collect();
        Ok(Self {
            config,
            tick: 0,
            seed,
            task: def.spec(),
            player,
            enemies,
            items,
            walls,
            obstacles: layout.obstacles,
            width: layout.width,
            height: layout.height,
            notices: Vec::new(),
            rng_state: rng,
            rollout: false,
        })
    }

    /// A private two-cell duel used to evaluate counters: the enemy stands next
    /// to the player, begins `pattern` at tick 0, and disengages when it ends.
    pub fn duel(config: Arc<ArenaConfig>, archetype: Archetype, pattern: AttackPattern) -> Self {
        let mut cfg = (*config).clone();
        let base = cfg.archetype(archetype).cloned();
        let entry = PatternDef {
            pattern,
            cue: "rollout".into(),
            description: "rollout".into(),
            symbol: '?',
            weight: 1,
        };
        let mut adef = base.unwrap_or(ArchetypeDef {
            archetype,
            glyph: '?',
            hp: 1,
            idle_ticks: [0, 0],
            attack_chance: 0.0,
            patterns: Vec::new(),
        });
        adef.patterns = vec![entry];
        cfg.archetypes.retain(|d| d.archetype != archetype);
        cfg.archetypes.push(adef);
        let t = &cfg.tuning;
        let player = PlayerState {
            hp: t.player_max_hp.max(1_000_000),
            max_hp: t.player_max_hp.max(1_000_000),
            heal_charges: 0,
            heavy_charge: 0,
            immobilize_ready_at: u64::MAX,
            position: Vec2::new(1, 1),
            facing: Direction::E,
            invulnerable_until: 0,
            light_hits_banked: 0,
        };
        let enemy = EnemyState {
            archetype,
            hp: 1_000_000,
            max_hp: 1_000_000,
            position: Vec2::new(2, 1),
            active_pattern: Some(ActivePattern { index: 0, phase_tick: 0 }),
            frozen_until: 0,
            idle_until: u64::MAX,
            next_move_at: u64::MAX,
            engaged: true,
            dormant: false,
            disengaged: false,
        };
        let task = TaskSpec {
            task_id: 0,
            name: "Rollout".into(),
            description: "counter rollout".into(),
            difficulty: crate::task::Difficulty::Easy,
            kind: TaskKind::Combat,
            tick_budget: u64::MAX,
            enemy: Some(archetype),
        };
        Self {
            config: Arc::new(cfg),
            tick: 0,
            seed: 0,
            task,
            player,
            enemies: vec![enemy],
            items: Vec::new(),
            walls: BTreeSet::new(),
            obstacles: BTreeMap::new(),
            width: 4,
            height: 3,
            notices: Vec::new(),
            rng_state: ChaCha8Rng::seed_from_u64(0),
            rollout: true,
        }
    }

    pub fn config(&self) -> &Arc<ArenaConfig> {
        &self.config
    }

    pub fn goal(&self) -> Option<&EnemyState> {
        self.enemies.iter().find(|e| e.dormant)
    }

    /// True once a rollout duel's pattern has run to completion or been cancelled.
    pub fn rollout_finished(&self) -> bool {
        self.rollout && self.enemies.iter().all(|e| e.active_pattern.is_none())
    }

    pub fn status(&self) -> TaskStatus {
        if self.player.hp == 0 {
            return TaskStatus::Failure(FailureReason::PlayerKilled);
        }
        let done = match self.task.kind {
            TaskKind::Combat => self.enemies.iter().filter(|e| !e.dormant).all(|e| !e.alive()),
            TaskKind::Gather => self
                .items
                .iter()
                .filter(|i| i.kind == ItemKind::Gatherable)
                .all(|i| i.taken),
            TaskKind::Open => self
                .items
                .iter()
                .filter(|i| i.kind == ItemKind::Chest)
                .all(|i| i.taken),
            TaskKind::Navigate => self
                .goal()
                .is_some_and(|g| g.position.manhattan(self.player.position) <= 1),
        };
        if done && !self.rollout {
            return TaskStatus::Success;
        }
        if self.tick > self.task.tick_budget {
            return TaskStatus::Failure(FailureReason::Timeout);
        }
        TaskStatus::Ongoing
    }

    pub fn execute_sequence(&mut self, seq: &ActionSequence) -> ExecOutcome {
        let mut total = ExecOutcome::default();
        for cmd in seq {
            if self.status().is_terminal() {
                break;
            }
            total.absorb(self.execute_atomic(*cmd));
        }
        total
    }

    pub fn execute_atomic(&mut self, cmd: AtomicCommand) -> AtomicOutcome {
        let mut out = ExecOutcome::default();
        if self.status().is_terminal() {
            return out;
        }
        self.notices.clear();
        out.commands_executed = 1;
        let cost = self.config.tuning.costs.of(cmd).max(1);
        let start = self.tick;
        let mut heavy_armed = false;
        let mut heal_armed = false;

        match cmd {
            AtomicCommand::Dodge => {
                self.player.invulnerable_until = self.player.invulnerable_until.max(start + cost);
            }
            AtomicCommand::Move(dir) => self.try_move(dir, &mut out),
            AtomicCommand::CastImmobilize => self.cast_immobilize(&mut out),
            AtomicCommand::HeavyAttack => {
                if self.player.heavy_charge > 0 {
                    self.player.heavy_charge -= 1;
                    heavy_armed = true;
                } else {
                    out.events.push(Event::NoOp {
                        tick: start,
                        command: cmd,
                        reason: "no heavy charge".into(),
                    });
                }
            }
            AtomicCommand::RestoreHealth => {
                if self.player.heal_charges > 0 {
                    self.player.heal_charges -= 1;
                    heal_armed = true;
                } else {
                    out.events.push(Event::NoOp {
                        tick: start,
                        command: cmd,
                        reason: "no heal charges".into(),
                    });
                }
            }
            AtomicCommand::LightAttack | AtomicCommand::Interact => {}
        }

        for i in 0..cost {
            let t = self.tick;
            if i == cost - 1 {
                match cmd {
                    AtomicCommand::LightAttack => self.strike(false, &mut out),
                    AtomicCommand::HeavyAttack if heavy_armed => self.strike(true, &mut out),
                    AtomicCommand::RestoreHealth if heal_armed => {
                        let before = self.player.hp;
                        self.player.hp =
                            (self.player.hp + self.config.tuning.heal_amount).min(self.player.max_hp);
                        out.events.push(Event::Healed { tick: t, amount: self.player.hp - before });
                        self.notices.push("Health restored".into());
                    }
                    AtomicCommand::Interact => self.interact(&mut out),
                    _ => {}
                }
            }
            self.enemies_tick(t, &mut out);
            self.tick = t + 1;
            out.ticks_elapsed += 1;
            if self.status().is_terminal() {
                break;
            }
        }

        match self.status() {
            TaskStatus::Ongoing => self.boundary(&mut out),
            TaskStatus::Success => {
                if self.task.kind == TaskKind::Navigate {
                    out.events.push(Event::GoalReached { tick: self.tick });
                    self.notices.push("Destination reached".into());
                }
            }
            TaskStatus::Failure(FailureReason::PlayerKilled) => {
                out.events.push(Event::PlayerKilled { tick: self.tick });
                self.notices.push("You died".into());
            }
            TaskStatus::Failure(_) => {}
        }
        out
    }

    fn blocked(&self, from: Vec2, to: Vec2) -> bool {
        if to.x < 0 || to.y < 0 || to.x >= self.width || to.y >= self.height {
            return true;
        }
        if self.obstacles.contains_key(&to) || self.walls.contains(&Edge::between(from, to)) {
            return true;
        }
        if self.enemies.iter().any(|e| e.alive() && !e.disengaged && e.position == to) {
            return true;
        }
        if to == self.player.position {
            return true;
        }
        self.items
            .iter()
            .any(|i| i.kind == ItemKind::Chest && i.position == to)
    }

    fn try_move(&mut self, dir: Direction, out: &mut ExecOutcome) {
        self.player.facing = dir;
        let from = self.player.position;
        let to = from.step(dir);
        if self.blocked(from, to) {
            out.events.push(Event::Blocked { tick: self.tick });
        } else {
            self.player.position = to;
            out.events.push(Event::Moved { tick: self.tick, to });
        }
    }

    fn cast_immobilize(&mut self, out: &mut ExecOutcome) {
        let t = self.tick;
        if t < self.player.immobilize_ready_at {
            out.events.push(Event::NoOp {
                tick: t,
                command: AtomicCommand::CastImmobilize,
                reason: "spell on cooldown".into(),
            });
            return;
        }
        let range = self.config.tuning.immobilize_range;
        let pos = self.player.position;
        let target = self
            .enemies
            .iter()
            .enumerate()
            .filter(|(_, e)| e.targetable() && !e.dormant && e.position.manhattan(pos) <= range)
            .min_by_key(|(i, e)| (e.position.manhattan(pos), *i))
            .map(|(i, _)| i);
        let Some(idx) = target else {
            out.events.push(Event::NoOp {
                tick: t,
                command: AtomicCommand::CastImmobilize,
                reason: "no target in range".into(),
            });
            return;
        };
        let freeze = self.config.tuning.immobilize_freeze_ticks;
        self.player.immobilize_ready_at = t + self.config.tuning.immobilize_cooldown_ticks;
        let cancelled = self.enemies[idx].active_pattern.take();
        let archetype = self.enemies[idx].archetype;
        if let Some(active) = cancelled {
            let label = self.pattern_def(archetype, active.index).pattern.label.clone();
            out.events.push(Event::PatternCancelled { tick: t, archetype, label });
        }
        let e = &mut self.enemies[idx];
        e.frozen_until = t + freeze;
        e.idle_until = e.idle_until.max(t + freeze);
        out.events.push(Event::Immobilized { tick: t, target: archetype });
        self.notices.push(format!("{archetype} immobilized"));
    }

    fn strike(&mut self, heavy: bool, out: &mut ExecOutcome) {
        let t = self.tick;
        let pos = self.player.position;
        let facing_cell = pos.step(self.player.facing);
        let target = self
            .enemies
            .iter()
            .enumerate()
            .filter(|(_, e)| e.targetable() && e.position.manhattan(pos) == 1)
            .min_by_key(|(i, e)| (e.position != facing_cell, *i))
            .map(|(i, _)| i);
        let Some(idx) = target else {
            out.events.push(Event::Whiff { tick: t });
            return;
        };
        if let Some(d) = pos.direction_to(self.enemies[idx].position) {
            self.player.facing = d;
        }
        let tuning = &self.config.tuning;
        let damage = if heavy { tuning.heavy_damage } else { tuning.light_damage };
        let e = &mut self.enemies[idx];
        let dealt = damage.min(e.hp);
        e.hp -= dealt;
        e.engaged = true;
        let archetype = e.archetype;
        out.damage_dealt += dealt;
        out.hits_landed += 1;
        out.events.push(Event::HitLanded { tick: t, target: archetype, damage: dealt, heavy });
        if !heavy {
            self.player.light_hits_banked += 1;
            if self.player.light_hits_banked >= tuning.light_hits_per_heavy_charge {
                self.player.light_hits_banked = 0;
                self.player.heavy_charge = (self.player.heavy_charge + 1).min(tuning.max_heavy_charge);
            }
        }
        let e = &mut self.enemies[idx];
        if e.hp == 0 {
            e.active_pattern = None;
            out.events.push(Event::EnemyDefeated { tick: t, archetype });
            self.notices.push(format!("{archetype} defeated"));
        }
    }

    fn interact(&mut self, out: &mut ExecOutcome) {
        let t = self.tick;
        let pos = self.player.position;
        let found = self
            .items
            .iter_mut()
            .find(|i| !i.taken && i.position.manhattan(pos) <= 1);
        match found {
            Some(item) => {
                item.taken = true;
                match item.kind {
                    ItemKind::Gatherable => {
                        out.events.push(Event::Gathered { tick: t });
                        self.notices.push("Item gathered".into());
                    }
                    ItemKind::Chest => {
                        out.events.push(Event::ChestOpened { tick: t });
                        self.notices.push("Chest opened".into());
                    }
                }
            }
            None => out.events.push(Event::NoOp {
                tick: t,
                command: AtomicCommand::Interact,
                reason: "nothing to interact with".into(),
            }),
        }
    }

    fn pattern_def(&self, archetype: Archetype, index: usize) -> &PatternDef {
        &self
            .config
            .archetype(archetype)
            .expect("archetype present in config")
            .patterns[index]
    }

    /// Enemy behaviour for tick `t`: strikes, pattern progress, and movement.
    fn enemies_tick(&mut self, t: u64, out: &mut ExecOutcome) {
        let aggro = self.config.tuning.aggro_range;
        let move_interval = self.config.tuning.enemy_move_interval.max(1);
        for idx in 0..self.enemies.len() {
            let e = &self.enemies[idx];
            if !e.alive() || e.dormant || e.disengaged || t < e.frozen_until {
                continue;
            }
            if let Some(active) = e.active_pattern.clone() {
                let archetype = e.archetype;
                let epos = e.position;
                let def = self.pattern_def(archetype, active.index).clone();
                let phase = active.phase_tick;
                for (hit_phase, hit) in def.pattern.hit_phases() {
                    if hit_phase != phase {
                        continue;
                    }
                    if epos.manhattan(self.player.position) > hit.reach_cells {
                        continue;
                    }
                    let evaded = t < self.player.invulnerable_until;
                    let mut damage = hit.damage_hp;
                    if evaded {
                        out.hits_evaded += 1;
                    } else {
                        damage = damage.min(self.player.hp);
                        self.player.hp -= damage;
                        out.hp_lost += damage;
                        out.hits_taken += 1;
                    }
                    out.events.push(Event::EnemyHit {
                        tick: t,
                        archetype,
                        label: def.pattern.label.clone(),
                        phase,
                        damage,
                        evaded,
                    });
                }
                let duration = def.pattern.duration();
                let next = phase + 1;
                if next >= duration {
                    out.events.push(Event::PatternEnd {
                        tick: t,
                        archetype,
                        label: def.pattern.label.clone(),
                        duration,
                    });
                    let adef = self.config.archetype(archetype).expect("archetype");
                    let (lo, hi) = (adef.idle_ticks[0], adef.idle_ticks[1]);
                    let idle = if self.rollout { 0 } else { self.rng_state.gen_range(lo..=hi) };
                    let e = &mut self.enemies[idx];
                    e.active_pattern = None;
                    e.idle_until = t + 1 + idle;
                    if self.rollout {
                        e.disengaged = true;
                    }
                } else {
                    self.enemies[idx].active_pattern =
                        Some(ActivePattern { index: active.index, phase_tick: next });
                }
                continue;
            }
            let dist = e.position.manhattan(self.player.position);
            if !e.engaged && dist <= aggro {
                self.enemies[idx].engaged = true;
            }
            let e = &self.enemies[idx];
            if e.engaged && dist > 1 && t >= e.next_move_at {
                let from = e.position;
                let target = self.player.position;
                let mut step = None;
                let dx = target.x - from.x;
                let dy = target.y - from.y;
                let mut options: Vec<Direction> = Vec::with_capacity(2);
                let horiz = if dx > 0 { Direction::E } else { Direction::W };
                let vert = if dy > 0 { Direction::S } else { Direction::N };
                if dx.abs() >= dy.abs() {
                    if dx != 0 {
                        options.push(horiz);
                    }
                    if dy != 0 {
                        options.push(vert);
                    }
                } else {
                    if dy != 0 {
                        options.push(vert);
                    }
                    if dx != 0 {
                        options.push(horiz);
                    }
                }
                for d in options {
                    let to = from.step(d);
                    if !self.enemy_blocked(idx, from, to) {
                        step = Some(to);
                        break;
                    }
                }
                let e = &mut self.enemies[idx];
                if let Some(to) = step {
                    e.position = to;
                }
                e.next_move_at = t + move_interval;
            }
        }
    }

    fn enemy_blocked(&self, idx: usize, from: Vec2, to: Vec2) -> bool {
        if to == self.player.position {
            return true;
        }
        if to.x < 0 || to.y < 0 || to.x >= self.width || to.y >= self.height {
            return true;
        }
        if self.obstacles.contains_key(&to) || self.walls.contains(&Edge::between(from, to)) {
            return true;
        }
        if self.items.iter().any(|i| i.kind == ItemKind::Chest && i.position == to) {
            return true;
        }
        self.enemies
            .iter()
            .enumerate()
            .any(|(j, e)| j != idx && e.alive() && e.position == to)
    }

    /// Command boundary: idle enemies next to the player may begin a pattern.
    fn boundary(&mut self, out: &mut ExecOutcome) {
        if self.rollout {
            return;
        }
        let t = self.tick;
        for idx in 0..self.enemies.len() {
            let e = &self.enemies[idx];
            if !e.alive()
                || e.dormant
                || e.active_pattern.is_some()
                || !e.engaged
                || t < e.frozen_until
                || t < e.idle_until
                || e.position.manhattan(self.player.position) > 1
            {
                continue;
            }
            let archetype = e.archetype;
            let adef = self.config.archetype(archetype).expect("archetype").clone();
            if self.rng_state.gen::<f64>() >= adef.attack_chance {
                continue;
            }
            let total: u32 = adef.patterns.iter().map(|p| p.weight).sum();
            let mut roll = self.rng_state.gen_range(0..total.max(1));
            let mut chosen = 0;
            for (i, p) in adef.patterns.iter().enumerate() {
                if roll < p.weight {
                    chosen = i;
                    break;
                }
                roll -= p.weight;
            }
            self.enemies[idx].active_pattern = Some(ActivePattern { index: chosen, phase_tick: 0 });
            out.events.push(Event::PatternStart {
                tick: t,
                archetype,
                label: adef.patterns[chosen].pattern.label.clone(),
            });
        }
    }

    /// Telegraph currently shown for enemy `idx`, if it is winding up.
    pub(crate) fn telegraph(&self, idx: usize) -> Option<&PatternDef> {
        let e = &self.enemies[idx];
        let active = e.active_pattern.as_ref()?;
        let def = self.pattern_def(e.archetype, active.index);
        (active.phase_tick < def.pattern.telegraph_ticks).then_some(def)
    }
}
