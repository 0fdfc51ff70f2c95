//! Registered reply schemas, typed answers, and tolerant reply parsing.
//!
//! A reply may wrap its answer in prose and code fences. The first
//! well-formed JSON object found in the text is the answer; later objects are
//! ignored even when the first one fails validation.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::{GatewayError, SchemaId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldType {
    Bool,
    Text,
    Number,
    Count,
    /// Text or null.
    OptText,
    /// `[x, y]` integers or null.
    OptCell,
    Choice(&'static [&'static str]),
}

pub struct Field {
    pub name: &'static str,
    pub ty: FieldType,
}

macro_rules! f {
    ($name:literal, $ty:expr) => {
        Field { name: $name, ty: $ty }
    };
}

pub const COMBAT_MODES: &[&str] = &["light", "heavy"];

pub fn fields(id: SchemaId) -> &'static [Field] {
    use FieldType::*;
    match id {
        SchemaId::Reflection => &[
            f!("last_action_succeeded", Bool),
            f!("task_complete", Bool),
            f!("failure_reason", OptText),
        ],
        SchemaId::TaskInference => &[f!("task_description", Text)],
        SchemaId::EnemyReport => &[
            f!("archetype", Text),
            f!("hp_estimate", Number),
            f!("position", OptCell),
            f!("action_description", Text),
        ],
        SchemaId::CombatMode => &[f!("combat_mode", Choice(COMBAT_MODES))],
        SchemaId::HealthReport => &[f!("heal_now", Bool)],
        SchemaId::SpellReport => &[f!("cast_spell_now", Bool)],
        SchemaId::Integration => &[f!("chosen", Text), f!("rationale", Text)],
        SchemaId::MonolithicDecision => &[
            f!("action_description", Text),
            f!("combat_mode", Choice(COMBAT_MODES)),
            f!("heal_now", Bool),
            f!("cast_spell_now", Bool),
            f!("chosen", Text),
            f!("rationale", Text),
        ],
        SchemaId::EnemyAction => &[
            f!("archetype", Text),
            f!("label", Text),
            f!("hit_count", Count),
            f!("cue", Text),
        ],
        SchemaId::GuidanceSummary => &[f!("annotation", Text)],
    }
}

pub fn system_prompt(id: SchemaId) -> &'static str {
    match id {
        SchemaId::Reflection => include_str!("../../assets/prompts/reflection.txt"),
        SchemaId::TaskInference => include_str!("../../assets/prompts/task_inference.txt"),
        SchemaId::EnemyReport => include_str!("../../assets/prompts/enemy_report.txt"),
        SchemaId::CombatMode => include_str!("../../assets/prompts/combat_mode.txt"),
        SchemaId::HealthReport => include_str!("../../assets/prompts/health_report.txt"),
        SchemaId::SpellReport => include_str!("../../assets/prompts/spell_report.txt"),
        SchemaId::Integration => include_str!("../../assets/prompts/integration.txt"),
        SchemaId::MonolithicDecision => include_str!("../../assets/prompts/monolithic_decision.txt"),
        SchemaId::EnemyAction => include_str!("../../assets/prompts/enemy_action.txt"),
        SchemaId::GuidanceSummary => include_str!("../../assets/prompts/guidance_summary.txt"),
    }
}

/// JSON Schema document for a reply schema, as shipped in `assets/schemas`.
pub fn json_schema(id: SchemaId) -> Value {
    let mut props = Map::new();
    for field in fields(id) {
        let spec = match field.ty {
            FieldType::Bool => json!({"type": "boolean"}),
            FieldType::Text => json!({"type": "string", "minLength": 1}),
            FieldType::Number => json!({"type": "number"}),
            FieldType::Count => json!({"type": "integer", "minimum": 0}),
            FieldType::OptText => json!({"type": ["string", "null"]}),
            FieldType::OptCell => json!({"oneOf": [
                {"type": "null"},
                {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}
            ]}),
            FieldType::Choice(options) => json!({"enum": options}),
        };
        props.insert(field.name.to_string(), spec);
    }
    let required: Vec<&str> = fields(id).iter().map(|f| f.name).collect();
    json!({
        "$schema": "http://json-schema.org/draft-07/schema#",
        "title": id.as_str(),
        "type": "object",
        "properties": props,
        "required": required,
    })
}

/// Finds the first well-formed JSON object in `raw`.
pub fn first_json_object(raw: &str) -> Option<Value> {
    for (i, ch) in raw.char_indices() {
        if ch != '{' {
            continue;
        }
        let mut stream = serde_json::Deserializer::from_str(&raw[i..]).into_iter::<Value>();
        if let Some(Ok(v @ Value::Object(_))) = stream.next() {
            return Some(v);
        }
    }
    None
}

pub fn validate(id: SchemaId, value: &Value) -> Result<(), String> {
    let obj = value.as_object().ok_or_else(|| "answer is not an object".to_string())?;
    for field in fields(id) {
        let name = field.name;
        let v = obj.get(name).ok_or_else(|| format!("missing field `{name}`"))?;
        let ok = match field.ty {
            FieldType::Bool => v.is_boolean(),
            FieldType::Text => v.as_str().is_some_and(|s| !s.trim().is_empty()),
            FieldType::Number => v.is_number(),
            FieldType::Count => v.is_u64(),
            FieldType::OptText => v.is_null() || v.is_string(),
            FieldType::OptCell => match v {
                Value::Null => true,
                Value::Array(items) => {
                    if items.len() != 2 {
                        return Err(format!("field `{name}`: expected 2 coordinates"));
                    }
                    if let Some(i) = items.iter().position(|c| !c.is_i64()) {
                        return Err(format!("field `{name}[{i}]`: expected integer"));
                    }
                    true
                }
                _ => false,
            },
            FieldType::Choice(options) => match v.as_str() {
                Some(s) if options.contains(&s) => true,
                Some(s) => {
                    return Err(format!("field `{name}`: `{s}` is not one of {}", options.join("|")))
                }
                None => false,
            },
        };
        if !ok {
            return Err(format!("field `{name}`: wrong type ({v})"));
        }
    }
    Ok(())
}

/// Extracts and validates the answer in `raw_text` for `schema_id`.
pub fn parse_structured(raw_text: &str, schema_id: SchemaId) -> Result<Value, GatewayError> {
    let err = |message: String| GatewayError::Parse {
        schema: schema_id.to_string(),
        message,
        raw_text: raw_text.to_string(),
    };
    let value = first_json_object(raw_text).ok_or_else(|| err("no JSON object in reply".into()))?;
    validate(schema_id, &value).map_err(err)?;
    Ok(value)
}

/// Deserializes an already validated answer into its typed form.
pub fn typed<T: DeserializeOwned>(schema_id: SchemaId, value: &Value) -> Result<T, GatewayError> {
    serde_json::from_value(value.clone()).map_err(|e| GatewayError::Parse {
        schema: schema_id.to_string(),
        message: e.to_string(),
        raw_text: value.to_string(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionAnswer {
    pub last_action_succeeded: bool,
    pub task_complete: bool,
    pub failure_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInferenceAnswer {
    pub task_description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemyReportAnswer {
    /// `none` when no enemy is visible.
    pub archetype: String,
    pub hp_estimate: f64,
    pub position: Option<[i32; 2]>,
    pub action_description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombatModeAnswer {
    pub combat_mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HealthReportAnswer {
    pub heal_now: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpellReportAnswer {
    pub cast_spell_now: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationAnswer {
    pub chosen: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonolithicAnswer {
    pub action_description: String,
    pub combat_mode: String,
    pub heal_now: bool,
    pub cast_spell_now: bool,
    pub chosen: String,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnemyActionAnswer {
    pub archetype: String,
    pub label: String,
    pub hit_count: u32,
    pub cue: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceSummaryAnswer {
    pub annotation: String,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prose_around_block() {
        let raw = "Let me think.\n```json\n{\"heal_now\": true}\n```\nDone.";
        assert_eq!(parse_structured(raw, SchemaId::HealthReport).unwrap()["heal_now"], true);
    }

    #[test]
    fn first_block_wins() {
        let raw = "{\"heal_now\": false} and later {\"heal_now\": true}";
        assert_eq!(parse_structured(raw, SchemaId::HealthReport).unwrap()["heal_now"], false);
        let raw = "{\"nope\": 1} then {\"heal_now\": true}";
        assert!(parse_structured(raw, SchemaId::HealthReport).is_err());
    }

    #[test]
    fn bad_enum_names_field() {
        let err = parse_structured("{\"combat_mode\": \"medium\"}", SchemaId::CombatMode).unwrap_err();
        assert!(err.to_string().contains("combat_mode"), "{err}");
        let err = parse_structured(
            "{\"archetype\":\"B\",\"hp_estimate\":1,\"position\":[1,\"x\"],\"action_description\":\"a\"}",
            SchemaId::EnemyReport,
        )
        .unwrap_err();
        assert!(err.to_string().contains("position[1]"), "{err}");
    }

    #[test]
    fn no_block_is_an_error() {
        let err = parse_structured("I refuse", SchemaId::Integration).unwrap_err();
        match err {
            GatewayError::Parse { raw_text, .. } => assert_eq!(raw_text, "I refuse"),
            other => panic!("{other}"),
        }
    }

    #[test]
    fn broken_brace_skipped() {
        let raw = "{oops {\"task_description\": \"x\"}";
        assert_eq!(parse_structured(raw, SchemaId::TaskInference).unwrap()["task_description"], "x");
    }
}
