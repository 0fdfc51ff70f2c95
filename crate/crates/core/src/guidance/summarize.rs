use serde_json::json;
use varp_arena::{ActionSequence, MAX_SEQUENCE_LEN};

use super::keymap::{events_to_atomics, Keymap};
use crate::error::{Result, VarpError};
use crate::gateway::schema::GuidanceSummaryAnswer;
use crate::gateway::{schema, Backend, PromptBundle, SchemaId, Trace};
use crate::memory::{ActionEntry, ActionLibrary, GuidanceWindow, Provenance};

/// Turns a retrieved stretch of human play into a library action. The body
/// always comes from the recorded inputs; the backend only writes the
/// annotation.
pub fn summarize_to_action(
    window: &GuidanceWindow,
    backend: &dyn Backend,
    library: &mut ActionLibrary,
    keymap: &Keymap,
    trace: Trace,
) -> Result<ActionEntry> {
    let atomics = events_to_atomics(&window.operations(), keymap);
    if atomics.commands.is_empty() {
        return Err(VarpError::domain("guidance window holds no mapped inputs"));
    }
    if atomics.commands.len() > MAX_SEQUENCE_LEN {
        return Err(VarpError::domain(format!(
            "guidance window maps to {} commands, more than one action may hold",
            atomics.commands.len()
        )));
    }
    let body = ActionSequence::new(atomics.commands.clone())?;
    let tokens: Vec<&str> = atomics.commands.iter().map(|c| c.token()).collect();
    let bundle = PromptBundle::new(
        SchemaId::GuidanceSummary,
        "Summarize what the player did in these frames as a reusable action.",
        &json!({ "commands": tokens }),
        vec![window.anchor.frame_snapshot.clone()],
        trace,
    );
    let reply = backend.complete(&bundle)?;
    let parsed = match reply.parsed {
        Some(v) => v,
        None => schema::parse_structured(&reply.raw_text, SchemaId::GuidanceSummary)?,
    };
    let answer: GuidanceSummaryAnswer = schema::typed(SchemaId::GuidanceSummary, &parsed)?;

    let base = format!("human_guided_{}_{}", window.anchor.session_id.replace('-', "_"), window.anchor.tick);
    let mut name = base.clone();
    let mut k = 2;
    while library.get(&name).is_some() {
        name = format!("{base}_{k}");
        k += 1;
    }
    Ok(library.add(&name, &answer.annotation, body, Provenance::HumanGuided, None)?.clone())
}
