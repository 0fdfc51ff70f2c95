//! Deterministic rule-based stand-in for a vision-language model.
//!
//! It reads the textual frame (perfect perception) plus the prompt's context
//! block and answers with a fixed rule per schema. Decision queries are
//! deliberately fallible: each question is answered wrongly with probability
//! `epsilon_decomposed` when asked alone and `epsilon_monolithic` when bundled
//! with the others. Every coin is seeded by (episode seed, step, schema,
//! question), so replies are a pure function of the prompt.
//!
//! Rule table:
//!
//! | schema          | rule |
//! |-----------------|------|
//! | reflection      | succeeded iff damage dealt, all hits evaded, or progress; complete iff `TASK COMPLETE` |
//! | task_inference  | templates keyed by task kind and what is on screen |
//! | enemy_report    | nearest enemy, its bar, and the description of its wind-up or `idle` |
//! | combat_mode     | `heavy` iff heavy charge >= 1 |
//! | health_report   | heal iff hp < 0.35 and a charge is left |
//! | spell_report    | cast iff ready, a wind-up is visible and the enemy is within 3 cells |
//! | integration     | counter > dodge > guided path > goal/item > attack (see `choose`) |
//! | enemy_action    | telegraph glyph through the legend, else `unknown` |

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;
use varp_arena::{Frame, ItemKind, Legend, TASK_COMPLETE_NOTICE};

use super::schema::*;
use super::{parse_structured, Backend, GatewayError, ModelReply, PromptBundle, SchemaId, Trace, Usage};
use crate::perception::Scene;

pub const HEAL_THRESHOLD: f64 = 0.35;
pub const SPELL_RANGE: u32 = 3;

pub struct ScriptedOracle {
    legend: Legend,
    epsilon_decomposed: f64,
    epsilon_monolithic: f64,
}

impl ScriptedOracle {
    pub fn new(epsilon_decomposed: f64, epsilon_monolithic: f64) -> Self {
        Self { legend: Legend::bundled(), epsilon_decomposed, epsilon_monolithic }
    }

    pub fn infallible() -> Self {
        Self::new(0.0, 0.0)
    }

    fn coin(&self, trace: Trace, schema: SchemaId, question: &str) -> ChaCha8Rng {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let seed_bytes = trace.seed.to_le_bytes();
        let step_bytes = trace.step.to_le_bytes();
        for b in seed_bytes
            .iter()
            .chain(&step_bytes)
            .chain(schema.as_str().as_bytes())
            .chain(b"/")
            .chain(question.as_bytes())
        {
            h ^= u64::from(*b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        ChaCha8Rng::seed_from_u64(h)
    }

    fn wrong(&self, trace: Trace, schema: SchemaId, question: &str, eps: f64) -> bool {
        eps > 0.0 && self.coin(trace, schema, question).gen::<f64>() < eps
    }

    fn answer(&self, bundle: &PromptBundle) -> Result<Value, GatewayError> {
        let frame = bundle
            .frames
            .first()
            .ok_or_else(|| GatewayError::Domain("oracle needs at least one frame".into()))?;
        let ctx = bundle.context().unwrap_or(Value::Null);
        let scene = Scene::scan(frame, &self.legend);
        let trace = bundle.trace;
        let id = bundle.schema_id;
        let eps = self.epsilon_decomposed;
        Ok(match id {
            SchemaId::Reflection => to_value(reflection(frame, &ctx)),
            SchemaId::TaskInference => to_value(TaskInferenceAnswer { task_description: infer_task(frame, &scene, &ctx) }),
            SchemaId::EnemyReport => {
                let mut r = enemy_report(&scene);
                if self.wrong(trace, id, "enemy", eps) {
                    r.action_description = self.misread_action(&scene, &r.action_description);
                }
                to_value(r)
            }
            SchemaId::CombatMode => {
                let heavy = (frame.hud.heavy_charge >= 1) ^ self.wrong(trace, id, "mode", eps);
                to_value(CombatModeAnswer { combat_mode: if heavy { "heavy" } else { "light" }.into() })
            }
            SchemaId::HealthReport => to_value(HealthReportAnswer {
                heal_now: heal_rule(frame) ^ self.wrong(trace, id, "heal", eps),
            }),
            SchemaId::SpellReport => to_value(SpellReportAnswer {
                cast_spell_now: spell_rule(frame, &scene) ^ self.wrong(trace, id, "spell", eps),
            }),
            SchemaId::Integration => {
                let reports = &ctx["reports"];
                let action = reports["enemy"]["action_description"].as_str().unwrap_or("idle").to_string();
                let heavy = reports["combat_mode"].as_str() == Some("heavy");
                let (mut chosen, mut rationale) = self.choose(&scene, &ctx, &action, heavy);
                if self.wrong(trace, id, "choice", eps) {
                    (chosen, rationale) = self.other_candidate(trace, id, &ctx, chosen, rationale);
                }
                to_value(IntegrationAnswer { chosen, rationale })
            }
            SchemaId::MonolithicDecision => {
                let m = self.epsilon_monolithic;
                let mut action = enemy_report(&scene).action_description;
                if self.wrong(trace, id, "enemy", m) {
                    action = self.misread_action(&scene, &action);
                }
                let heavy = (frame.hud.heavy_charge >= 1) ^ self.wrong(trace, id, "mode", m);
                let heal_now = heal_rule(frame) ^ self.wrong(trace, id, "heal", m);
                let cast_spell_now = spell_rule(frame, &scene) ^ self.wrong(trace, id, "spell", m);
                let (mut chosen, mut rationale) = self.choose(&scene, &ctx, &action, heavy);
                if self.wrong(trace, id, "choice", m) {
                    (chosen, rationale) = self.other_candidate(trace, id, &ctx, chosen, rationale);
                }
                to_value(MonolithicAnswer {
                    action_description: action,
                    combat_mode: if heavy { "heavy" } else { "light" }.into(),
                    heal_now,
                    cast_spell_now,
                    chosen,
                    rationale,
                })
            }
            SchemaId::EnemyAction => to_value(enemy_action(&scene)),
            SchemaId::GuidanceSummary => to_value(GuidanceSummaryAnswer { annotation: guidance_annotation(&ctx) }),
        })
    }

    /// A wrong reading of the enemy: sees no wind-up where there is one, or
    /// imagines the archetype's first pattern where there is none.
    fn misread_action(&self, scene: &Scene, actual: &str) -> String {
        if actual != "idle" {
            return "idle".into();
        }
        let Some(enemy) = scene.nearest_enemy() else { return "idle".into() };
        self.legend
            .telegraphs
            .values()
            .find(|t| t.archetype == enemy.archetype)
            .map_or_else(|| "idle".into(), |t| t.description.clone())
    }

    fn other_candidate(
        &self,
        trace: Trace,
        id: SchemaId,
        ctx: &Value,
        chosen: String,
        rationale: String,
    ) -> (String, String) {
        let names = candidate_names(ctx);
        let others: Vec<&String> = names.iter().filter(|n| **n != chosen).collect();
        if others.is_empty() {
            return (chosen, rationale);
        }
        let pick = self.coin(trace, id, "choice/which").gen_range(0..others.len());
        (others[pick].clone(), "it seemed like a reasonable option".into())
    }

    /// The integration rule. Candidates come from the context block.
    fn choose(&self, scene: &Scene, ctx: &Value, action: &str, heavy: bool) -> (String, String) {
        let names = candidate_names(ctx);
        let has = |n: &str| names.iter().any(|c| c == n);
        let kind = ctx["task_kind"].as_str().unwrap_or("combat");
        let telegraph = (action != "idle")
            .then(|| self.legend.telegraphs.values().find(|t| t.description == action))
            .flatten();

        if let Some(t) = telegraph {
            let counter = ctx["candidates"].as_array().into_iter().flatten().find(|c| {
                c["key"]["archetype"].as_str() == Some(t.archetype.name()) && c["key"]["label"].as_str() == Some(t.label.as_str())
            });
            if let Some(c) = counter.and_then(|c| c["name"].as_str()) {
                return (c.to_string(), format!("{} is {}; use the stored counter for {}", t.archetype, action, t.label));
            }
            if has("dodge_once") {
                return ("dodge_once".into(), format!("{} is {}; dodge", t.archetype, action));
            }
        }
        let step_name = |target| scene.step_toward(target).map(|d| format!("move_step_{}", d.word()));
        match kind {
            "navigate" => {
                let guided = ctx["candidates"].as_array().into_iter().flatten().find(|c| {
                    c["provenance"].as_str() == Some("human_guided") && c["injected"].as_bool() == Some(true)
                });
                if let Some(name) = guided.and_then(|c| c["name"].as_str()) {
                    return (name.to_string(), "follow the path a human took from a similar spot".into());
                }
                if let Some(goal) = scene.nearest_enemy() {
                    if let Some(n) = step_name(goal.cell).filter(|n| has(n)) {
                        return (n, "walk toward the goal".into());
                    }
                }
                if has("move_step_north") {
                    return ("move_step_north".into(), "no goal in sight; explore north".into());
                }
            }
            "gather" | "open" => {
                if let (Some(p), Some((cell, _))) = (scene.player, scene.nearest_item()) {
                    if p.manhattan(cell) <= 1 && has("interact_here") {
                        return ("interact_here".into(), "the item is within reach".into());
                    }
                    if let Some(n) = step_name(cell).filter(|n| has(n)) {
                        return (n, "walk to the item".into());
                    }
                }
            }
            _ => {
                if let (Some(p), Some(e)) = (scene.player, scene.nearest_enemy()) {
                    if p.manhattan(e.cell) > 1 {
                        if let Some(n) = step_name(e.cell).filter(|n| has(n)) {
                            return (n, format!("close the distance to {}", e.archetype));
                        }
                    } else if heavy && has("heavy_strike") {
                        return ("heavy_strike".into(), "heavy charge available".into());
                    } else if has("basic_light_combo") {
                        return ("basic_light_combo".into(), "enemy in reach; attack".into());
                    }
                }
            }
        }
        let first = names.first().cloned().unwrap_or_else(|| "basic_light_combo".into());
        (first, "best match for the task description".into())
    }
}

fn to_value<T: Serialize>(v: T) -> Value {
    serde_json::to_value(v).expect("answer serializes")
}

fn candidate_names(ctx: &Value) -> Vec<String> {
    ctx["candidates"]
        .as_array()
        .into_iter()
        .flatten()
        .filter_map(|c| c["name"].as_str().map(String::from))
        .collect()
}

fn heal_rule(frame: &Frame) -> bool {
    frame.hud.hp_fraction < HEAL_THRESHOLD && frame.hud.heal_charges > 0
}

fn spell_rule(frame: &Frame, scene: &Scene) -> bool {
    let Some(p) = scene.player else { return false };
    frame.hud.spell_ready
        && scene.telegraphs.iter().any(|t| {
            t.owner
                .map(|i| scene.enemies[i].cell.manhattan(p) <= SPELL_RANGE)
                .unwrap_or(false)
        })
}

fn reflection(frame: &Frame, ctx: &Value) -> ReflectionAnswer {
    let out = &ctx["outcome"];
    let n = |k: &str| out[k].as_u64().unwrap_or(0);
    let progress = out["progress"].as_bool().unwrap_or(false);
    let succeeded = n("damage_dealt") > 0 || (n("hits_evaded") > 0 && n("hits_taken") == 0) || progress;
    let failure_reason = (!succeeded).then(|| {
        if n("hits_taken") > 0 {
            format!("dealt no damage and took {} hit(s)", n("hits_taken"))
        } else {
            "the action had no visible effect".to_string()
        }
    });
    ReflectionAnswer { last_action_succeeded: succeeded, task_complete: frame.has_notice(TASK_COMPLETE_NOTICE), failure_reason }
}

fn infer_task(frame: &Frame, scene: &Scene, ctx: &Value) -> String {
    if frame.has_notice(TASK_COMPLETE_NOTICE) {
        return "task complete; idle".into();
    }
    let task = &ctx["task"];
    let kind = task["kind"].as_str().unwrap_or("combat");
    let target_name = task["enemy"].as_str().unwrap_or("the enemy");
    let low = if frame.hud.hp_fraction < HEAL_THRESHOLD { "; low health" } else { "" };
    let p = scene.player;
    let text = match kind {
        "gather" | "open" => match (p, scene.nearest_item()) {
            (Some(p), Some((cell, kind))) => {
                let noun = if kind == ItemKind::Chest { "chest" } else { "item" };
                let verb = if kind == ItemKind::Chest { "open" } else { "interact" };
                if p.manhattan(cell) <= 1 {
                    format!("move to the {noun} and {verb}")
                } else {
                    let dir = scene.step_toward(cell).map_or("on", |d| d.word());
                    format!("move to the {noun} and {verb} (head {dir})")
                }
            }
            _ => "explore north to find the item".into(),
        },
        "navigate" => match (p, scene.nearest_enemy()) {
            (Some(_), Some(goal)) => {
                let dir = scene.step_toward(goal.cell).map_or("on", |d| d.word());
                format!("move {dir} toward {}", goal.archetype)
            }
            _ => format!("explore north to find {target_name}"),
        },
        _ => match (p, scene.nearest_enemy()) {
            (Some(p), Some(e)) => {
                let idx = scene.enemies.iter().position(|x| x == e).expect("enemy from scene");
                if let Some(t) = scene.telegraph_of(idx) {
                    format!("fight {}: counter {} ({})", e.archetype, t.info.label, t.info.description)
                } else if p.manhattan(e.cell) <= 1 {
                    format!("fight {} with light attacks", e.archetype)
                } else {
                    let dir = scene.step_toward(e.cell).map_or("on", |d| d.word());
                    format!("approach {} moving {dir}", e.archetype)
                }
            }
            _ => format!("explore north to find {target_name}"),
        },
    };
    format!("{text}{low}")
}

fn enemy_report(scene: &Scene) -> EnemyReportAnswer {
    let Some(e) = scene.nearest_enemy() else {
        return EnemyReportAnswer {
            archetype: "none".into(),
            hp_estimate: 0.0,
            position: None,
            action_description: "idle".into(),
        };
    };
    let idx = scene.enemies.iter().position(|x| x == e).expect("enemy from scene");
    EnemyReportAnswer {
        archetype: e.archetype.name().into(),
        hp_estimate: e.hp_fraction.unwrap_or(1.0),
        position: Some([e.cell.x, e.cell.y]),
        action_description: scene.telegraph_of(idx).map_or_else(|| "idle".into(), |t| t.info.description.clone()),
    }
}

fn enemy_action(scene: &Scene) -> EnemyActionAnswer {
    match scene.telegraphs.first() {
        Some(t) => EnemyActionAnswer {
            archetype: t.info.archetype.name().into(),
            label: t.info.label.clone(),
            hit_count: t.hit_count as u32,
            cue: t.info.cue.clone(),
        },
        None => EnemyActionAnswer {
            archetype: scene.nearest_enemy().map_or("none", |e| e.archetype.name()).into(),
            label: "unknown".into(),
            hit_count: 0,
            cue: "none".into(),
        },
    }
}

fn guidance_annotation(ctx: &Value) -> String {
    let cmds: Vec<&str> = ctx["commands"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
    let mut counts: Vec<(&str, usize)> = Vec::new();
    for c in &cmds {
        match counts.iter_mut().find(|(n, _)| n == c) {
            Some((_, k)) => *k += 1,
            None => counts.push((c, 1)),
        }
    }
    counts.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let moves: Vec<&str> = counts.iter().filter(|(c, _)| c.starts_with("move_")).map(|(c, _)| &c[5..]).collect();
    let parts: Vec<String> = counts.iter().map(|(c, k)| format!("{c} x{k}")).collect();
    if moves.is_empty() {
        format!("human-guided action: {}", parts.join(", "))
    } else {
        format!("human-guided path heading {}: {}", moves.join(" then "), parts.join(", "))
    }
}

impl Backend for ScriptedOracle {
    fn complete(&self, bundle: &PromptBundle) -> Result<ModelReply, GatewayError> {
        bundle.validate()?;
        let answer = self.answer(bundle)?;
        let raw_text = format!(
            "Reading the frame at tick {}.\n```json\n{}\n```",
            bundle.frames.first().map_or(0, |f| f.tick),
            serde_json::to_string(&answer).expect("answer serializes")
        );
        let parsed = parse_structured(&raw_text, bundle.schema_id)?;
        let input_units = bundle.user_segments.iter().map(|s| s.len() as u64).sum::<u64>() + bundle.system_text.len() as u64;
        Ok(ModelReply {
            usage: Usage { request_count: 1, input_units, output_units: raw_text.len() as u64 },
            raw_text,
            parsed: Some(parsed),
        })
    }

    fn name(&self) -> &str {
        "scripted_oracle"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;
    use varp_arena::{new_world, render_frame};

    fn ask(oracle: &ScriptedOracle, id: SchemaId, frame: Frame, ctx: Value) -> Value {
        let b = PromptBundle::new(id, "question", &ctx, vec![frame], Trace { seed: 1, step: 0 });
        oracle.complete(&b).unwrap().parsed.unwrap()
    }

    #[test]
    fn low_health_means_heal() {
        let mut w = new_world(2, 0).unwrap();
        w.player.hp = 20;
        let o = ScriptedOracle::infallible();
        assert_eq!(ask(&o, SchemaId::HealthReport, render_frame(&w), json!({}))["heal_now"], true);
        w.player.heal_charges = 0;
        assert_eq!(ask(&o, SchemaId::HealthReport, render_frame(&w), json!({}))["heal_now"], false);
    }

    #[test]
    fn pure_function_of_inputs() {
        let w = new_world(9, 3).unwrap();
        let o = ScriptedOracle::new(0.5, 0.5);
        for id in SchemaId::ALL {
            let b = PromptBundle::new(id, "q", &json!({"task": {"kind": "combat"}}), vec![render_frame(&w)], Trace { seed: 4, step: 2 });
            assert_eq!(o.complete(&b).unwrap(), o.complete(&b).unwrap());
        }
    }

    #[test]
    fn guidance_annotation_mentions_direction() {
        let a = guidance_annotation(&json!({"commands": ["move_east", "move_east", "move_north"]}));
        assert!(a.contains("east"), "{a}");
    }
}
