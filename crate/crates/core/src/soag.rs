//! Counter-actions against enemy attack patterns: recognise the move, seed a
//! dodge-then-attack counter, then improve it by local search scored in a
//! private duel against the move as it was observed.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use varp_arena::{
    ActionSequence, ArenaConfig, Archetype, AtomicCommand, AttackPattern, ExecOutcome, Frame, HitWindow, WorldState,
};

use crate::agent::{GatheredInfo, ReflectionVerdict};
use crate::error::{Result, VarpError};
use crate::gateway::schema::EnemyActionAnswer;
use crate::gateway::{schema, Backend, PromptBundle, SchemaId, Trace};
use crate::memory::{ActionLibrary, ActionStats, CounterKey, Provenance};
use crate::par::{self, Exec};

const D: AtomicCommand = AtomicCommand::Dodge;
const A: AtomicCommand = AtomicCommand::LightAttack;

pub const UNKNOWN_LABEL: &str = "unknown";
/// Light attacks a fresh counter swings after its dodges.
const SEED_ATTACKS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizeConfig {
    /// Weight of hp lost against damage dealt.
    pub lambda: f64,
    /// Mutations evaluated per optimize call.
    pub neighbor_budget: usize,
    pub max_len: usize,
}

impl Default for OptimizeConfig {
    fn default() -> Self {
        Self { lambda: 1.0, neighbor_budget: 8, max_len: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnemyActionLabel {
    pub archetype: Archetype,
    pub label: String,
    pub hit_count: usize,
    /// Short visual cue, used to name counters.
    pub cue: String,
}

impl EnemyActionLabel {
    pub fn is_unknown(&self) -> bool {
        self.label == UNKNOWN_LABEL
    }

    pub fn key(&self) -> CounterKey {
        CounterKey { archetype: self.archetype, label: self.label.clone() }
    }
}

/// Asks the backend what the enemy on screen is doing.
pub fn recognize_enemy_action(
    gathered: &GatheredInfo,
    reflection: &ReflectionVerdict,
    current: &Frame,
    last: Option<&Frame>,
    backend: &dyn Backend,
    trace: Trace,
) -> Result<EnemyActionLabel> {
    let enemy = gathered
        .entities
        .iter()
        .find(|e| e.kind == crate::agent::EntityKind::Enemy)
        .ok_or_else(|| VarpError::domain("no enemy in view"))?;
    let frames = last.into_iter().cloned().chain(std::iter::once(current.clone())).collect();
    let ctx = json!({
        "enemy": enemy.label,
        "notices": gathered.notices,
        "last_action_succeeded": reflection.last_action_succeeded,
    });
    let bundle = PromptBundle::new(
        SchemaId::EnemyAction,
        "Name the attack the enemy is winding up, using the previous and current frames.",
        &ctx,
        frames,
        trace,
    );
    let reply = backend.complete(&bundle)?;
    let value = match reply.parsed {
        Some(v) => v,
        None => schema::parse_structured(&reply.raw_text, SchemaId::EnemyAction)?,
    };
    let a: EnemyActionAnswer = schema::typed(SchemaId::EnemyAction, &value)?;
    let archetype = a.archetype.parse().unwrap_or_else(|_| enemy.archetype.unwrap_or(Archetype::Bullguard));
    Ok(EnemyActionLabel { archetype, label: a.label, hit_count: a.hit_count as usize, cue: a.cue })
}

/// Dodge through every observed strike, one extra dodge of margin, then
/// attack. A single strike gets one dodge.
pub fn synthesize_counter(hit_count: usize, cfg: &OptimizeConfig) -> ActionSequence {
    let dodges = if hit_count <= 1 { 1 } else { hit_count + 1 };
    let mut body = vec![D; dodges];
    body.extend(std::iter::repeat_n(A, SEED_ATTACKS));
    body.truncate(cfg.max_len.min(varp_arena::MAX_SEQUENCE_LEN));
    ActionSequence::new(body).expect("length within cap")
}

pub fn score(outcome: &ExecOutcome, cfg: &OptimizeConfig) -> f64 {
    f64::from(outcome.damage_dealt) - cfg.lambda * f64::from(outcome.hp_lost)
}

/// Plays `body` against `pattern` in a private duel that starts at the first
/// telegraph frame.
pub fn rollout(archetype: Archetype, pattern: &AttackPattern, body: &[AtomicCommand]) -> ExecOutcome {
    let mut world = WorldState::duel(ArenaConfig::bundled(), archetype, pattern.clone());
    let mut total = ExecOutcome::default();
    for cmd in body {
        total.absorb(world.execute_atomic(*cmd));
    }
    total
}

fn letters(body: &[AtomicCommand]) -> String {
    body.iter().map(|c| c.letter()).collect()
}

/// Better first: higher score, then shorter, then lexicographically smaller.
fn better(a: (f64, &[AtomicCommand]), b: (f64, &[AtomicCommand])) -> bool {
    match a.0.total_cmp(&b.0) {
        std::cmp::Ordering::Greater => true,
        std::cmp::Ordering::Less => false,
        std::cmp::Ordering::Equal => (a.1.len(), letters(a.1)) < (b.1.len(), letters(b.1)),
    }
}

/// Every single mutation of `body`, deduplicated, in a fixed order.
pub fn neighbors(body: &[AtomicCommand], max_len: usize) -> Vec<Vec<AtomicCommand>> {
    let mut out: Vec<Vec<AtomicCommand>> = Vec::new();
    let mut push = |v: Vec<AtomicCommand>| {
        if !v.is_empty() && v.len() <= max_len && v != body && !out.contains(&v) {
            out.push(v);
        }
    };
    for i in 0..body.len().saturating_sub(1) {
        let mut v = body.to_vec();
        v.swap(i, i + 1);
        push(v);
    }
    for i in 0..=body.len() {
        for c in [D, A] {
            let mut v = body.to_vec();
            v.insert(i, c);
            push(v);
        }
    }
    for i in 0..body.len() {
        let mut v = body.to_vec();
        v.remove(i);
        push(v);
    }
    for i in 0..body.len().saturating_sub(1) {
        if body[i] == D && body[i + 1] == D {
            let mut v = body.to_vec();
            v.insert(i + 1, A);
            push(v);
        }
    }
    out
}

/// One hill-climbing step: evaluates up to `neighbor_budget` sampled
/// mutations and moves to the best one unless it scores below `body`.
/// Returns the kept body with its rollout score.
pub fn optimize_counter(
    archetype: Archetype,
    pattern: &AttackPattern,
    body: &ActionSequence,
    cfg: &OptimizeConfig,
    sample_seed: u64,
) -> (ActionSequence, f64) {
    let current = body.commands().to_vec();
    let current_score = score(&rollout(archetype, pattern, &current), cfg);
    if cfg.neighbor_budget == 0 {
        return (body.clone(), current_score);
    }
    let mut pool = neighbors(&current, cfg.max_len.min(varp_arena::MAX_SEQUENCE_LEN));
    pool.shuffle(&mut ChaCha8Rng::seed_from_u64(sample_seed));
    pool.truncate(cfg.neighbor_budget);
    let mut best: Option<(f64, Vec<AtomicCommand>)> = None;
    for cand in pool {
        let s = score(&rollout(archetype, pattern, &cand), cfg);
        if best.as_ref().is_none_or(|(bs, bb)| better((s, &cand), (*bs, bb))) {
            best = Some((s, cand));
        }
    }
    // Equal-scoring neighbours are accepted so the search can walk across plateaus.
    match best {
        Some((s, b)) if s >= current_score => (ActionSequence::new(b).expect("length within cap"), s),
        _ => (body.clone(), current_score),
    }
}

/// Exhaustive optimum over all dodge/attack strings up to `max_len`.
pub fn brute_force(
    archetype: Archetype,
    pattern: &AttackPattern,
    max_len: usize,
    cfg: &OptimizeConfig,
    exec: Exec,
) -> (ActionSequence, f64) {
    let mut all: Vec<Vec<AtomicCommand>> = vec![Vec::new()];
    for len in 1..=max_len {
        for bits in 0u32..(1 << len) {
            all.push((0..len).map(|i| if bits >> (len - 1 - i) & 1 == 1 { A } else { D }).collect());
        }
    }
    let scores = par::map(exec, &all, |b| score(&rollout(archetype, pattern, b), cfg));
    let mut best = 0;
    for i in 1..all.len() {
        if better((scores[i], &all[i]), (scores[best], &all[best])) {
            best = i;
        }
    }
    (ActionSequence::new(all[best].clone()).expect("length within cap"), scores[best])
}

/// Rebuilds a pattern from what a live exchange showed: strike phases with
/// their damage, and the total length. Reach is taken as melee range since
/// rollouts put the enemy next to the player.
pub fn reconstruct_pattern(label: &str, hits: &[(u64, u32)], duration: u64) -> Option<AttackPattern> {
    let (first, _) = *hits.first()?;
    let (last, _) = *hits.last()?;
    if first == 0 || duration <= last {
        return None;
    }
    let pattern = AttackPattern {
        label: label.to_string(),
        telegraph_ticks: first,
        hit_windows: hits
            .iter()
            .map(|&(phase, damage)| HitWindow { offset_ticks: phase - first, damage_hp: damage.max(1), reach_cells: 1 })
            .collect(),
        recovery_ticks: duration - last,
    };
    pattern.validate().ok().map(|_| pattern)
}

/// Union of two sightings of the same move: every strike either showed.
pub fn merge_patterns(known: &AttackPattern, seen: &AttackPattern) -> AttackPattern {
    let phases = |p: &AttackPattern| p.hit_phases().map(|(ph, h)| (ph, h.damage_hp)).collect::<Vec<_>>();
    let mut hits = phases(known);
    for (ph, d) in phases(seen) {
        match hits.iter_mut().find(|(p, _)| *p == ph) {
            Some(h) => h.1 = h.1.max(d),
            None => hits.push((ph, d)),
        }
    }
    hits.sort();
    let duration = known.duration().max(seen.duration());
    reconstruct_pattern(&known.label, &hits, duration).unwrap_or_else(|| known.clone())
}

pub fn counter_name(archetype: Archetype, cue: &str) -> String {
    let cue: String = cue
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_lowercase() } else { '_' })
        .collect();
    format!("fight_new_action_{}_{}", archetype.snake(), cue.trim_matches('_'))
}

pub fn counter_annotation(archetype: Archetype, label: &str, description: &str, body: &ActionSequence) -> String {
    format!(
        "counter for {archetype} {label} ({description}): {}",
        body.summary()
    )
}

/// What an update did to the library.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoagUpdate {
    pub name: String,
    pub created: bool,
    pub body_changed: bool,
    pub score: f64,
}

/// Creates the counter on first sighting, otherwise folds the new sighting
/// into the stored pattern and takes one optimisation step.
pub fn soag_update(
    library: &mut ActionLibrary,
    label: &EnemyActionLabel,
    description: &str,
    observed: &AttackPattern,
    cfg: &OptimizeConfig,
) -> Result<SoagUpdate> {
    let key = label.key();
    let existing = library.by_key(&key).map(|e| e.name.clone());
    let Some(name) = existing else {
        let name = counter_name(label.archetype, &label.cue);
        let body = synthesize_counter(label.hit_count.max(observed.hit_count()), cfg);
        let s = score(&rollout(label.archetype, observed, body.commands()), cfg);
        let annotation = counter_annotation(label.archetype, &label.label, description, &body);
        library.add(&name, &annotation, body, Provenance::Soag, Some(key))?;
        let entry = library.get_mut(&name)?;
        entry.pattern = Some(observed.clone());
        entry.score_history.push(s);
        return Ok(SoagUpdate { name, created: true, body_changed: false, score: s });
    };

    let entry = library.get(&name).expect("entry exists");
    let pattern = entry.pattern.as_ref().map_or_else(|| observed.clone(), |p| merge_patterns(p, observed));
    let round = entry.score_history.len() as u64;
    let seed = round ^ (u64::from(label.archetype as u8) << 32) ^ label.label.bytes().fold(0u64, |h, b| h.wrapping_mul(31).wrapping_add(u64::from(b)));
    let (body, s) = optimize_counter(label.archetype, &pattern, &entry.body, cfg, seed);
    let changed = body != entry.body;
    let annotation = counter_annotation(label.archetype, &label.label, description, &body);
    library.update_action(&name, Some(body), Some(&annotation), ActionStats::default())?;
    let entry = library.get_mut(&name)?;
    entry.pattern = Some(pattern);
    entry.score_history.push(s);
    Ok(SoagUpdate { name, created: false, body_changed: changed, score: s })
}
