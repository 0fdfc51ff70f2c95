//! A scripted stand-in for human players, used to produce the bundled
//! dataset. It reads the world directly (enemy timers included), so it
//! dodges perfectly and walks through the maze by breadth-first search; it
//! sends its choices through the same keymap a person would and sprinkles in
//! the usual input noise: key releases, pointer motion and key bounce.

use std::collections::{BTreeMap, VecDeque};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varp_arena::world::Edge;
use varp_arena::{
    render_frame, ArenaConfig, AtomicCommand, Direction, ItemKind, TaskKind, TaskStatus, Vec2, WorldState,
};

use super::keymap::{InputEvent, InputKind, Keymap};
use super::session::{Session, SessionHeader, SessionRecorder, SESSION_FORMAT_VERSION};
use crate::error::{Result, VarpError};

/// Sessions per task in the bundled dataset.
pub type DemoPlan = [(u8, usize)];

pub const BUNDLED_PLAN: &DemoPlan = &[
    (1, 1),
    (2, 3),
    (3, 2),
    (4, 2),
    (5, 2),
    (6, 2),
    (7, 2),
    (8, 2),
    (9, 2),
    (10, 2),
    (11, 1),
    (12, 4),
];

const KEYFRAME_EVERY: u64 = 8;
const CREATED_AT: u64 = 1_767_225_600;
const COMMAND_CAP: u64 = 5_000;

fn passable(world: &WorldState, from: Vec2, to: Vec2) -> bool {
    to.x >= 0
        && to.y >= 0
        && to.x < world.width
        && to.y < world.height
        && !world.obstacles.contains_key(&to)
        && !world.walls.contains(&Edge::between(from, to))
        && !world.enemies.iter().any(|e| e.alive() && !e.disengaged && e.position == to)
        && !world.items.iter().any(|i| i.kind == ItemKind::Chest && i.position == to)
}

/// First step of a shortest path to any cell in `targets`.
fn path_step(world: &WorldState, targets: &[Vec2]) -> Option<Direction> {
    let start = world.player.position;
    let mut first: BTreeMap<Vec2, Option<Direction>> = BTreeMap::new();
    first.insert(start, None);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        if targets.contains(&c) {
            return first[&c];
        }
        for d in Direction::ALL {
            let n = c.step(d);
            if !first.contains_key(&n) && passable(world, c, n) {
                first.insert(n, first[&c].or(Some(d)));
                queue.push_back(n);
            }
        }
    }
    None
}

fn adjacent_cells(world: &WorldState, target: Vec2) -> Vec<Vec2> {
    Direction::ALL
        .iter()
        .map(|d| target.step(*d))
        .filter(|c| passable(world, target, *c) || *c == world.player.position)
        .collect()
}

/// Ticks until the next enemy strike that can reach the player.
fn next_hit_in(world: &WorldState) -> u64 {
    let cfg = world.config();
    let mut best = u64::MAX;
    for e in world.enemies.iter().filter(|e| e.alive() && !e.dormant) {
        let Some(active) = &e.active_pattern else { continue };
        let def = &cfg.archetype(e.archetype).expect("archetype").patterns[active.index].pattern;
        let frozen = e.frozen_until.saturating_sub(world.tick);
        for (phase, hit) in def.hit_phases() {
            if phase >= active.phase_tick && e.position.manhattan(world.player.position) <= hit.reach_cells {
                best = best.min(phase - active.phase_tick + frozen);
            }
        }
    }
    best
}

fn choose(world: &WorldState) -> Option<AtomicCommand> {
    let costs = &world.config().tuning.costs;
    let safe = |c: AtomicCommand| next_hit_in(world) >= costs.of(c);
    let p = &world.player;
    match world.task.kind {
        TaskKind::Gather | TaskKind::Open => {
            let item = world.items.iter().find(|i| !i.taken)?;
            if item.position.manhattan(p.position) <= 1 {
                return Some(AtomicCommand::Interact);
            }
            path_step(world, &adjacent_cells(world, item.position)).map(AtomicCommand::Move)
        }
        TaskKind::Navigate => {
            let goal = world.goal()?;
            path_step(world, &adjacent_cells(world, goal.position)).map(AtomicCommand::Move)
        }
        TaskKind::Combat => {
            let target = world
                .enemies
                .iter()
                .filter(|e| e.alive())
                .min_by_key(|e| e.position.manhattan(p.position))?;
            let heal = AtomicCommand::RestoreHealth;
            if p.hp * 10 < p.max_hp * 4 && p.heal_charges > 0 && safe(heal) {
                return Some(heal);
            }
            if target.position.manhattan(p.position) > 1 {
                let step = path_step(world, &adjacent_cells(world, target.position))
                    .or_else(|| p.position.direction_to(target.position))?;
                let mv = AtomicCommand::Move(step);
                return Some(if safe(mv) { mv } else { AtomicCommand::Dodge });
            }
            if p.heavy_charge > 0 && safe(AtomicCommand::HeavyAttack) {
                return Some(AtomicCommand::HeavyAttack);
            }
            if safe(AtomicCommand::LightAttack) {
                return Some(AtomicCommand::LightAttack);
            }
            Some(AtomicCommand::Dodge)
        }
    }
}

/// Plays one episode and records it.
pub fn demonstrate(task_id: u8, seed: u64, session_id: &str, keymap: &Keymap) -> Result<Session> {
    let mut world = WorldState::new(ArenaConfig::bundled(), task_id, seed)?;
    let mut noise = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut rec = SessionRecorder::new(SessionHeader {
        version: SESSION_FORMAT_VERSION,
        session_id: session_id.to_string(),
        task_id,
        seed,
        player_tag: "scripted-demonstrator".into(),
        clean: true,
        created_at: CREATED_AT,
    });
    let mut n = 0u64;
    while world.status() == TaskStatus::Ongoing && n < COMMAND_CAP {
        let Some(cmd) = choose(&world) else { break };
        let mut press = keymap
            .code_for(cmd)
            .ok_or_else(|| VarpError::domain(format!("no key bound to {cmd}")))?;
        let t = world.tick;
        press.tick = t;
        if noise.gen_bool(0.1) {
            rec.event(InputEvent::new(t, InputKind::MouseMove, "MouseMove"))?;
        }
        rec.event(press.clone())?;
        if press.kind == InputKind::KeyDown {
            rec.event(InputEvent::new(t, InputKind::KeyUp, &press.code))?;
        }
        let out = world.execute_atomic(cmd);
        n += 1;
        // A bounce lands inside the collapse window and must not become a command.
        if keymap.collapse_window(cmd) >= 2 && noise.gen_bool(0.15) {
            rec.event(InputEvent { tick: t + 1, ..press })?;
        }
        if n.is_multiple_of(KEYFRAME_EVERY) || world.status().is_terminal() {
            rec.keyframe(world.tick, render_frame(&world), out)?;
        }
    }
    let status = world.status();
    rec.end(world.tick, status)?;
    Ok(rec.finish())
}

pub fn session_id(task_id: u8, index: usize) -> String {
    format!("t{task_id:02}-{index:02}")
}

pub fn session_seed(task_id: u8, index: usize) -> u64 {
    1_000 + u64::from(task_id) * 10 + index as u64
}

/// Writes the sessions of `plan` into `dir`, one file each.
pub fn generate_dataset(dir: &Path, plan: &DemoPlan) -> Result<Vec<PathBuf>> {
    let keymap = Keymap::default();
    let mut paths = Vec::new();
    for &(task_id, count) in plan {
        for i in 0..count {
            let s = demonstrate(task_id, session_seed(task_id, i), &session_id(task_id, i), &keymap)?;
            paths.push(s.save(dir)?);
        }
    }
    Ok(paths)
}
