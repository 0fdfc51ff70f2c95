//! Runs an action's commands one at a time, watching the frame between
//! commands. A fresh enemy wind-up, or an enemy or item coming into reach
//! mid-walk, stops the action early so the agent can react.

use serde::{Deserialize, Serialize};
use varp_arena::{ActionSequence, AtomicCommand, ExecOutcome, Frame, Legend};

use super::env::Environment;
use crate::perception::Scene;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interrupt {
    TelegraphOnset,
    EnemyAdjacent,
    ItemAdjacent,
    TaskEnded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub outcome: ExecOutcome,
    /// Telegraph-onset frames, then the final frame.
    pub keyframes: Vec<Frame>,
    pub executed: usize,
    pub interrupted: Option<Interrupt>,
}

fn winding_up(scene: &Scene) -> Vec<usize> {
    let mut v: Vec<usize> = scene.telegraphs.iter().filter_map(|t| t.owner).collect();
    v.sort_unstable();
    v
}

fn adjacent(scene: &Scene) -> usize {
    scene
        .player
        .map_or(0, |p| scene.enemies.iter().filter(|e| e.cell.manhattan(p) <= 1).count())
}

fn items_in_reach(scene: &Scene) -> usize {
    scene.player.map_or(0, |p| scene.items.iter().filter(|(c, _)| c.manhattan(p) <= 1).count())
}

pub fn execute_action(env: &mut dyn Environment, body: &ActionSequence, legend: &Legend) -> Execution {
    let mut outcome = ExecOutcome::default();
    let mut keyframes = Vec::new();
    let mut prev = Scene::scan(&env.frame(), legend);
    let mut executed = 0;
    let mut interrupted = None;
    let mut last_frame = None;
    for (i, cmd) in body.iter().enumerate() {
        if env.status().is_terminal() {
            interrupted = Some(Interrupt::TaskEnded);
            break;
        }
        outcome.absorb(env.execute(*cmd));
        executed += 1;
        let frame = env.frame();
        let scene = Scene::scan(&frame, legend);
        let more = i + 1 < body.len();
        let onset = winding_up(&scene).iter().any(|o| !winding_up(&prev).contains(o))
            || (!scene.telegraphs.is_empty() && prev.telegraphs.is_empty());
        if onset {
            keyframes.push(frame.clone());
        }
        if more {
            if env.status().is_terminal() {
                interrupted = Some(Interrupt::TaskEnded);
            } else if onset {
                interrupted = Some(Interrupt::TelegraphOnset);
            } else if matches!(cmd, AtomicCommand::Move(_)) && adjacent(&scene) > adjacent(&prev) {
                interrupted = Some(Interrupt::EnemyAdjacent);
            } else if matches!(cmd, AtomicCommand::Move(_)) && items_in_reach(&scene) > items_in_reach(&prev) {
                interrupted = Some(Interrupt::ItemAdjacent);
            }
        }
        prev = scene;
        last_frame = Some(frame);
        if interrupted.is_some() {
            break;
        }
    }
    let final_frame = last_frame.unwrap_or_else(|| env.frame());
    if keyframes.last() != Some(&final_frame) {
        keyframes.push(final_frame);
    }
    Execution { outcome, keyframes, executed, interrupted }
}
