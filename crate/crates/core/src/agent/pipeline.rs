use std::sync::Arc;

use serde::de::DeserializeOwned;
use serde_json::{json, Value};
use varp_arena::{Event, ExecOutcome, FailureReason, Frame, TaskKind, TaskSpec, TaskStatus};
use varp_arena::frame::CELL_PX;

use super::env::{ArenaEnv, Environment};
use super::executor::execute_action;
use super::predefined::{FALLBACK_ACTION, HEAL_ACTION, SPELL_ACTION};
use super::*;
use crate::error::{Result, VarpError};
use crate::gateway::schema::{
    CombatModeAnswer, EnemyReportAnswer, HealthReportAnswer, IntegrationAnswer, MonolithicAnswer, ReflectionAnswer,
    SpellReportAnswer, TaskInferenceAnswer,
};
use crate::gateway::{schema, Backend, GatewayError, PromptBundle, SchemaId, Trace};
use crate::guidance::{summarize_to_action, Keymap};
use crate::memory::{ActionEntry, ActionLibrary, ActionStats, HumanGuidedLibrary, SituationLibrary, SituationRecord};
use crate::perception::{bundled_legend, Scene};
use crate::soag::{self, EnemyActionLabel};

/// The agent's memory for one episode. The human-guided library is shared
/// read-only between episodes.
#[derive(Debug, Clone)]
pub struct Libraries {
    pub actions: ActionLibrary,
    pub situations: SituationLibrary,
    pub guided: Arc<HumanGuidedLibrary>,
}

impl Libraries {
    pub fn new(actions: ActionLibrary, guided: Arc<HumanGuidedLibrary>) -> Self {
        Self { actions, situations: SituationLibrary::new(), guided }
    }
}

/// An enemy move being watched from its wind-up to its end.
#[derive(Debug, Clone)]
struct Exchange {
    label: EnemyActionLabel,
    description: String,
    hits: Vec<(u64, u32)>,
}

#[derive(Debug, Clone, Default)]
pub struct EpisodeState {
    pub step: u64,
    pub inference_count: u64,
    pub atomic_ops: u64,
    last_action: Option<String>,
    last_outcome: Option<ExecOutcome>,
    exchange: Option<Exchange>,
}

fn task_kind_str(kind: TaskKind) -> &'static str {
    match kind {
        TaskKind::Combat => "combat",
        TaskKind::Gather => "gather",
        TaskKind::Open => "open",
        TaskKind::Navigate => "navigate",
    }
}

/// Sends `bundle`, re-asking up to `reask` more times while the reply does
/// not parse. Transport failures are returned at once.
fn ask<T: DeserializeOwned>(backend: &dyn Backend, bundle: &PromptBundle, reask: u32) -> Result<T, GatewayError> {
    let mut last = None;
    for _ in 0..=reask {
        let attempt = backend.complete(bundle).and_then(|reply| {
            let value = match reply.parsed {
                Some(v) => v,
                None => schema::parse_structured(&reply.raw_text, bundle.schema_id)?,
            };
            schema::typed::<T>(bundle.schema_id, &value)
        });
        match attempt {
            Ok(v) => return Ok(v),
            Err(e) if e.is_parse() => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

/// Parse failures become `None`; anything else is fatal for the episode.
fn soft<T>(r: Result<T, GatewayError>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(e) if e.is_parse() => Ok(None),
        Err(e) => Err(e.into()),
    }
}

/// Reads the newest frame: notices, entities with pixel boxes, and the hud.
pub fn gather_information(frames: &[Frame]) -> GatheredInfo {
    let frame = frames.last().expect("gather_information needs a frame");
    let scene = Scene::scan(frame, bundled_legend());
    let bbox = |c: varp_arena::Vec2| [c.x as u32 * CELL_PX, c.y as u32 * CELL_PX, CELL_PX, CELL_PX];
    let mut entities: Vec<Entity> = scene
        .enemies
        .iter()
        .enumerate()
        .map(|(i, e)| Entity {
            kind: EntityKind::Enemy,
            label: e.archetype.name().to_string(),
            archetype: Some(e.archetype),
            bbox: bbox(e.cell),
            cell: e.cell,
            action_description: scene.telegraph_of(i).map(|t| t.info.description.clone()),
        })
        .collect();
    entities.extend(scene.items.iter().map(|(c, kind)| Entity {
        kind: EntityKind::Item,
        label: match kind {
            varp_arena::ItemKind::Gatherable => "item".into(),
            varp_arena::ItemKind::Chest => "chest".into(),
        },
        archetype: None,
        bbox: bbox(*c),
        cell: *c,
        action_description: None,
    }));
    GatheredInfo {
        notices: frame.notices.clone(),
        entities,
        hud_reading: HudReading {
            hp_fraction: frame.hud.hp_fraction,
            heal_charges: frame.hud.heal_charges,
            heavy_charge: frame.hud.heavy_charge,
            spell_ready: frame.hud.spell_ready,
        },
    }
}

pub fn self_reflect(
    recent_frames: &[Frame],
    last_action: Option<&str>,
    last_outcome: Option<&ExecOutcome>,
    backend: &dyn Backend,
    trace: Trace,
    reask: u32,
) -> Result<ReflectionVerdict> {
    let (Some(action), Some(outcome)) = (last_action, last_outcome) else {
        return Ok(ReflectionVerdict::first_step());
    };
    let ctx = json!({
        "last_action": action,
        "outcome": {
            "damage_dealt": outcome.damage_dealt,
            "hits_evaded": outcome.hits_evaded,
            "hits_taken": outcome.hits_taken,
            "progress": outcome.made_progress(),
        },
    });
    let bundle = PromptBundle::new(
        SchemaId::Reflection,
        "Did the last action have the intended effect, and is the task complete?",
        &ctx,
        recent_frames.to_vec(),
        trace,
    );
    let a: ReflectionAnswer = ask(backend, &bundle, reask)?;
    let failure_reason = match (a.last_action_succeeded, a.failure_reason) {
        (true, _) => None,
        (false, Some(r)) if !r.trim().is_empty() => Some(r),
        (false, _) => Some("no reason given".into()),
    };
    Ok(ReflectionVerdict { last_action_succeeded: a.last_action_succeeded, task_complete: a.task_complete, failure_reason })
}

pub fn infer_task(
    frame: &Frame,
    gathered: &GatheredInfo,
    reflection: &ReflectionVerdict,
    task: &TaskSpec,
    backend: &dyn Backend,
    trace: Trace,
    reask: u32,
) -> Result<String> {
    let ctx = json!({
        "task": {
            "name": task.name,
            "description": task.description,
            "kind": task_kind_str(task.kind),
            "enemy": task.enemy.map(|a| a.name()),
        },
        "notices": gathered.notices,
        "last_action_succeeded": reflection.last_action_succeeded,
        "task_complete": reflection.task_complete,
    });
    let bundle = PromptBundle::new(
        SchemaId::TaskInference,
        "Describe the task to carry out next in one line.",
        &ctx,
        vec![frame.clone()],
        trace,
    );
    let a: TaskInferenceAnswer = ask(backend, &bundle, reask)?;
    Ok(a.task_description)
}

fn candidate_json(candidates: &[(ActionEntry, f64)], injected: &[String]) -> Value {
    Value::Array(
        candidates
            .iter()
            .map(|(e, _)| {
                json!({
                    "name": e.name,
                    "annotation": e.annotation,
                    "provenance": e.provenance.to_string(),
                    "key": e.key.as_ref().map(|k| json!({"archetype": k.archetype.name(), "label": k.label})),
                    "injected": injected.contains(&e.name),
                })
            })
            .collect(),
    )
}

/// Chooses an action. Priority: heal, then spell, then the integrated choice.
#[allow(clippy::too_many_arguments)]
pub fn decide(
    candidates: &[(ActionEntry, f64)],
    injected: &[String],
    frame: &Frame,
    task_description: &str,
    task_kind: TaskKind,
    backend: &dyn Backend,
    config: &AgentConfig,
    trace: Trace,
) -> Result<Decision> {
    let names: Vec<&str> = candidates.iter().map(|(e, _)| e.name.as_str()).collect();
    let cands = candidate_json(candidates, injected);
    let frames = vec![frame.clone()];
    let reask = config.reask_budget;
    let kind = task_kind_str(task_kind);

    let (report, choice) = if config.dtsa_enabled {
        let q = |id: SchemaId, text: &str| PromptBundle::new(id, text, &json!({}), frames.clone(), trace);
        let enemy: Option<EnemyReportAnswer> =
            soft(ask(backend, &q(SchemaId::EnemyReport, "Report the nearest enemy and what it is doing."), reask))?;
        let mode: Option<CombatModeAnswer> =
            soft(ask(backend, &q(SchemaId::CombatMode, "Light or heavy attacks right now?"), reask))?;
        let health: Option<HealthReportAnswer> =
            soft(ask(backend, &q(SchemaId::HealthReport, "Should the player heal now?"), reask))?;
        let spell: Option<SpellReportAnswer> =
            soft(ask(backend, &q(SchemaId::SpellReport, "Should the player cast the spell now?"), reask))?;
        let enemy = enemy.map_or_else(
            || EnemyReport { archetype: "none".into(), hp_estimate: 0.0, position: None, action_description: "idle".into() },
            |e| EnemyReport { archetype: e.archetype, hp_estimate: e.hp_estimate, position: e.position, action_description: e.action_description },
        );
        // Heavy mode is only believed when a charge is on the hud.
        let heavy = mode.is_some_and(|m| m.combat_mode == "heavy") && frame.hud.heavy_charge >= 1;
        let report = SubmoduleReport {
            enemy,
            combat_mode: if heavy { CombatMode::Heavy } else { CombatMode::Light },
            heal_now: health.is_some_and(|h| h.heal_now),
            cast_spell_now: spell.is_some_and(|s| s.cast_spell_now),
        };
        let ctx = json!({
            "task_description": task_description,
            "task_kind": kind,
            "candidates": cands,
            "reports": {
                "enemy": report.enemy,
                "combat_mode": if heavy { "heavy" } else { "light" },
                "heal_now": report.heal_now,
                "cast_spell_now": report.cast_spell_now,
            },
        });
        let bundle = PromptBundle::new(
            SchemaId::Integration,
            "Pick the best candidate action given the reports.",
            &ctx,
            frames.clone(),
            trace,
        );
        let answer = integrate::<IntegrationAnswer>(backend, &bundle, reask, &names)?;
        (report, answer.map(|a| (a.chosen, a.rationale)))
    } else {
        let ctx = json!({ "task_description": task_description, "task_kind": kind, "candidates": cands });
        let bundle = PromptBundle::new(
            SchemaId::MonolithicDecision,
            "Read the enemy, the combat mode, health and spell state, then pick the best candidate action.",
            &ctx,
            frames.clone(),
            trace,
        );
        let answer = integrate::<MonolithicAnswer>(backend, &bundle, reask, &names)?;
        let report = SubmoduleReport {
            enemy: EnemyReport {
                archetype: "unknown".into(),
                hp_estimate: 0.0,
                position: None,
                action_description: answer.as_ref().map_or("idle".into(), |a| a.action_description.clone()),
            },
            combat_mode: match answer.as_ref().map(|a| a.combat_mode.as_str()) {
                Some("heavy") if frame.hud.heavy_charge >= 1 => CombatMode::Heavy,
                _ => CombatMode::Light,
            },
            heal_now: answer.as_ref().is_some_and(|a| a.heal_now),
            cast_spell_now: answer.as_ref().is_some_and(|a| a.cast_spell_now),
        };
        (report, answer.map(|a| (a.chosen, a.rationale)))
    };

    let mut overrides = Vec::new();
    let (chosen, rationale) = if report.heal_now {
        overrides.push("heal".to_string());
        (HEAL_ACTION.to_string(), "health is low; recovering first".to_string())
    } else if report.cast_spell_now {
        overrides.push("spell".to_string());
        (SPELL_ACTION.to_string(), "enemy winding up in spell range".to_string())
    } else if let Some(c) = choice {
        c
    } else {
        overrides.push("fallback".to_string());
        (FALLBACK_ACTION.to_string(), "no usable choice; attacking".to_string())
    };
    Ok(Decision { chosen, rationale, overrides, report: Some(report) })
}

trait Chosen {
    fn chosen(&self) -> &str;
}

impl Chosen for IntegrationAnswer {
    fn chosen(&self) -> &str {
        &self.chosen
    }
}

impl Chosen for MonolithicAnswer {
    fn chosen(&self) -> &str {
        &self.chosen
    }
}

/// Asks for a choice; a reply naming something outside the candidate set
/// counts as unusable and is re-asked like a parse failure.
fn integrate<T: DeserializeOwned + Chosen>(
    backend: &dyn Backend,
    bundle: &PromptBundle,
    reask: u32,
    names: &[&str],
) -> Result<Option<T>> {
    if names.is_empty() {
        return Ok(None);
    }
    for _ in 0..=reask {
        match soft(ask::<T>(backend, bundle, 0))? {
            Some(a) if names.contains(&a.chosen()) => return Ok(Some(a)),
            _ => continue,
        }
    }
    Ok(None)
}

fn step_stats(outcome: &ExecOutcome) -> ActionStats {
    let success = outcome.damage_dealt > 0 || outcome.made_progress() || (outcome.hits_evaded > 0 && outcome.hits_taken == 0);
    ActionStats {
        uses: 1,
        successes: u64::from(success),
        total_damage_dealt: u64::from(outcome.damage_dealt),
        total_hp_lost: u64::from(outcome.hp_lost),
    }
}

fn description_of(label: &EnemyActionLabel) -> String {
    bundled_legend()
        .telegraphs
        .values()
        .find(|t| t.archetype == label.archetype && t.label == label.label)
        .map_or_else(|| label.label.replace('_', " "), |t| t.description.clone())
}

/// One pass of the pipeline: gather, reflect, infer, curate, decide,
/// execute, record.
pub fn run_step(
    env: &mut dyn Environment,
    libs: &mut Libraries,
    backend: &dyn Backend,
    config: &AgentConfig,
    state: &mut EpisodeState,
) -> Result<StepResult> {
    let step_index = state.step;
    let frame = env.frame();
    if env.status().is_terminal() {
        return Ok(StepResult {
            step_index,
            noop: true,
            task_description: "task complete; idle".into(),
            decision: None,
            outcome: ExecOutcome::default(),
            status: env.status(),
            soag: None,
            guided_action: None,
        });
    }
    let trace = Trace { seed: env.seed(), step: step_index };
    let reask = config.reask_budget;
    let task = env.task().clone();

    let gathered = gather_information(std::slice::from_ref(&frame));
    let mut recent = libs.situations.recent_frames(config.m.saturating_sub(1));
    if recent.last() != Some(&frame) {
        recent.push(frame.clone());
    }
    let reflection = soft(self_reflect(
        &recent,
        state.last_action.as_deref(),
        state.last_outcome.as_ref(),
        backend,
        trace,
        reask,
    )
    .map_err(|e| match e {
        VarpError::Gateway(g) => g,
        other => GatewayError::Domain(other.to_string()),
    }))?
    .unwrap_or_else(ReflectionVerdict::first_step);
    let task_description = soft(
        infer_task(&frame, &gathered, &reflection, &task, backend, trace, reask).map_err(|e| match e {
            VarpError::Gateway(g) => g,
            other => GatewayError::Domain(other.to_string()),
        }),
    )?
    .unwrap_or_else(|| task.description.clone());

    // A wind-up on screen with no open exchange: name it and make sure a counter exists.
    let scene = Scene::scan(&frame, bundled_legend());
    if config.soag_enabled && state.exchange.is_none() && !scene.telegraphs.is_empty() {
        let last = libs.situations.last().and_then(|r| r.keyframes.last());
        let label = soft(
            soag::recognize_enemy_action(&gathered, &reflection, &frame, last, backend, trace).map_err(|e| match e {
                VarpError::Gateway(g) => g,
                other => GatewayError::Domain(other.to_string()),
            }),
        );
        if let Ok(Some(label)) = label {
            if !label.is_unknown() {
                let description = description_of(&label);
                if libs.actions.by_key(&label.key()).is_none() {
                    let body = soag::synthesize_counter(label.hit_count, &config.optimize);
                    let annotation = soag::counter_annotation(label.archetype, &label.label, &description, &body);
                    let name = soag::counter_name(label.archetype, &label.cue);
                    if libs.actions.get(&name).is_none() {
                        libs.actions.add(
                            &name,
                            &annotation,
                            body,
                            crate::memory::Provenance::Soag,
                            Some(label.key()),
                        )?;
                    }
                }
                state.exchange = Some(Exchange { label, description, hits: Vec::new() });
            }
        } else {
            label?;
        }
    }

    // Human guidance: the most similar recorded moment becomes a new action.
    let mut injected = Vec::new();
    if config.human_guidance_enabled && task.difficulty == varp_arena::Difficulty::VeryHard && !libs.guided.is_empty() {
        if let Ok(window) = libs.guided.query_guidance(&frame, config.n, config.exec) {
            let keymap = Keymap::default();
            match summarize_to_action(&window, backend, &mut libs.actions, &keymap, trace) {
                Ok(entry) => injected.push(entry.name),
                Err(VarpError::Gateway(g)) if !g.is_parse() => return Err(g.into()),
                Err(_) => {}
            }
        }
    }

    let query = libs.actions.embed(&task_description)?;
    let mut candidates = libs.actions.curate_skills(&query, config.k, config.exec);
    for name in &injected {
        if !candidates.iter().any(|(e, _)| &e.name == name) {
            if let Some(e) = libs.actions.get(name) {
                candidates.push((e.clone(), varp_arena_cosine(&query, e)));
            }
        }
    }

    let decision = decide(&candidates, &injected, &frame, &task_description, task.kind, backend, config, trace)?;
    state.inference_count += 1;

    let body = libs
        .actions
        .get(&decision.chosen)
        .map(|e| e.body.clone())
        .ok_or_else(|| VarpError::NotFound(format!("action `{}`", decision.chosen)))?;
    let execution = execute_action(env, &body, bundled_legend());
    state.atomic_ops += execution.executed as u64;
    let outcome = execution.outcome.clone();
    libs.actions.update_action(&decision.chosen, None, None, step_stats(&outcome))?;

    let mut soag_result = None;
    if let Some(ex) = state.exchange.as_mut() {
        let mut finished = None;
        for ev in &outcome.events {
            match ev {
                Event::EnemyHit { archetype, phase, damage, .. } if *archetype == ex.label.archetype => {
                    ex.hits.push((*phase, *damage));
                }
                Event::PatternCancelled { archetype, .. } | Event::EnemyDefeated { archetype, .. }
                    if *archetype == ex.label.archetype =>
                {
                    finished = Some(None);
                    break;
                }
                Event::PatternEnd { archetype, duration, .. } if *archetype == ex.label.archetype => {
                    finished = Some(Some(*duration));
                    break;
                }
                _ => {}
            }
        }
        if let Some(end) = finished {
            let ex = state.exchange.take().expect("open exchange");
            if let Some(duration) = end {
                if let Some(observed) = soag::reconstruct_pattern(&ex.label.label, &ex.hits, duration) {
                    for _ in 0..config.optimize_steps_per_exchange.max(1) {
                        soag_result = Some(soag::soag_update(
                            &mut libs.actions,
                            &ex.label,
                            &ex.description,
                            &observed,
                            &config.optimize,
                        )?);
                    }
                }
            }
        }
    }
    if !config.soag_enabled {
        state.exchange = None;
    }

    libs.situations.append_situation(SituationRecord {
        step_index,
        task_id: task.task_id,
        keyframes: execution.keyframes,
        gathered,
        reflection,
        task_description: task_description.clone(),
        chosen_action: decision.chosen.clone(),
        outcome: outcome.clone(),
    })?;
    state.step += 1;
    state.last_action = Some(decision.chosen.clone());
    state.last_outcome = Some(outcome.clone());

    Ok(StepResult {
        step_index,
        noop: false,
        task_description,
        decision: Some(decision),
        outcome,
        status: env.status(),
        soag: soag_result,
        guided_action: injected.into_iter().next(),
    })
}

fn varp_arena_cosine(q: &crate::gateway::EmbeddingVector, e: &ActionEntry) -> f64 {
    crate::gateway::cosine(q, &e.annotation_embedding)
}

/// Runs steps until the task ends or the step cap is hit.
pub fn run_episode(
    task_id: u8,
    seed: u64,
    libs: &mut Libraries,
    backend: &dyn Backend,
    config: &AgentConfig,
) -> Result<EpisodeResult> {
    config.validate()?;
    let mut env = ArenaEnv::new(task_id, seed)?;
    run_episode_in(&mut env, libs, backend, config)
}

pub fn run_episode_in(
    env: &mut dyn Environment,
    libs: &mut Libraries,
    backend: &dyn Backend,
    config: &AgentConfig,
) -> Result<EpisodeResult> {
    let mut state = EpisodeState::default();
    let mut status = env.status();
    while !status.is_terminal() {
        if state.step >= u64::from(config.step_cap) {
            status = TaskStatus::Failure(FailureReason::StepCap);
            break;
        }
        match run_step(env, libs, backend, config, &mut state) {
            Ok(r) => status = r.status,
            Err(VarpError::Gateway(_)) => {
                status = TaskStatus::Failure(FailureReason::Backend);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(EpisodeResult {
        status,
        ticks: env.tick(),
        steps: state.step,
        inference_count: state.inference_count,
        atomic_ops_count: state.atomic_ops,
    })
}
