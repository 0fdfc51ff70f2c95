use std::sync::Arc;

use varp_arena::{ActionSequence, AtomicCommand, Direction};

use crate::error::Result;
use crate::gateway::Embedder;
use crate::memory::{ActionLibrary, Provenance};

pub const FALLBACK_ACTION: &str = "basic_light_combo";
pub const HEAL_ACTION: &str = "recover_health";
pub const SPELL_ACTION: &str = "fight_immobilization_spell_skill";
pub const INTERACT_ACTION: &str = "interact_here";
pub const DODGE_ACTION: &str = "dodge_once";

/// Cells covered by one move step.
pub const MOVE_STEP_CELLS: usize = 8;

/// The hand-written starting actions: (name, annotation, body).
pub fn predefined_actions() -> Vec<(String, String, ActionSequence)> {
    use AtomicCommand::*;
    let seq = |v: Vec<AtomicCommand>| ActionSequence::new(v).expect("short body");
    let mut out = Vec::new();
    for d in Direction::ALL {
        let w = d.word();
        out.push((
            format!("move_step_{w}"),
            format!("move {w}: walk {MOVE_STEP_CELLS} cells {w} to approach an enemy, reach the item, or explore {w}"),
            seq(vec![Move(d); MOVE_STEP_CELLS]),
        ));
    }
    out.push((
        FALLBACK_ACTION.into(),
        "fight with light attacks: three quick light attack strikes on an adjacent enemy".into(),
        seq(vec![LightAttack; 3]),
    ));
    out.push((
        "heavy_strike".into(),
        "fight with a heavy attack: one strong heavy strike on an adjacent enemy, spends heavy charge".into(),
        seq(vec![HeavyAttack]),
    ));
    out.push((
        DODGE_ACTION.into(),
        "dodge once to evade an incoming enemy attack; counter a wind-up with a roll".into(),
        seq(vec![Dodge]),
    ));
    out.push((
        HEAL_ACTION.into(),
        "recover health: restore hp with a heal charge when health is low".into(),
        seq(vec![RestoreHealth]),
    ));
    out.push((
        SPELL_ACTION.into(),
        "cast the immobilization spell to freeze a nearby enemy and interrupt its attack".into(),
        seq(vec![CastImmobilize]),
    ));
    out.push((
        INTERACT_ACTION.into(),
        "interact with the item or chest next to you: gather the item, open the chest".into(),
        seq(vec![Interact]),
    ));
    out
}

/// A library holding only the predefined actions.
pub fn seed_library(embedder: Arc<dyn Embedder>) -> Result<ActionLibrary> {
    let mut lib = ActionLibrary::new(embedder);
    for (name, annotation, body) in predefined_actions() {
        lib.add(&name, &annotation, body, Provenance::Predefined, None)?;
    }
    Ok(lib)
}
