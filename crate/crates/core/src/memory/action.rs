use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use varp_arena::{ActionSequence, Archetype, AttackPattern};

use crate::error::{Result, VarpError};
use crate::gateway::{cosine, Embedder, EmbeddingVector};
use crate::par::{self, Exec};

pub const DEFAULT_K: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Predefined,
    Soag,
    HumanGuided,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Predefined => "predefined",
            Provenance::Soag => "soag",
            Provenance::HumanGuided => "human_guided",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionStats {
    pub uses: u64,
    pub successes: u64,
    pub total_damage_dealt: u64,
    pub total_hp_lost: u64,
}

impl ActionStats {
    pub fn add(&mut self, d: ActionStats) {
        self.uses += d.uses;
        self.successes += d.successes;
        self.total_damage_dealt += d.total_damage_dealt;
        self.total_hp_lost += d.total_hp_lost;
    }
}

/// Which enemy move a counter answers.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CounterKey {
    pub archetype: Archetype,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActionEntry {
    pub name: String,
    pub annotation: String,
    pub annotation_embedding: EmbeddingVector,
    pub body: ActionSequence,
    pub provenance: Provenance,
    pub stats: ActionStats,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<CounterKey>,
    /// The enemy move as observed so far; counters are scored against it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pattern: Option<AttackPattern>,
    /// Rollout scores of successive bodies; counters only.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub score_history: Vec<f64>,
}

/// Named actions with annotation embeddings. Cloning is cheap enough to give
/// every benchmark trial its own snapshot.
#[derive(Clone)]
pub struct ActionLibrary {
    embedder: Arc<dyn Embedder>,
    entries: BTreeMap<String, ActionEntry>,
}

impl fmt::Debug for ActionLibrary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ActionLibrary")
            .field("embedder", &self.embedder.id())
            .field("entries", &self.entries.len())
            .finish()
    }
}

impl PartialEq for ActionLibrary {
    fn eq(&self, other: &Self) -> bool {
        self.embedder.id() == other.embedder.id() && self.entries == other.entries
    }
}

impl ActionLibrary {
    pub fn new(embedder: Arc<dyn Embedder>) -> Self {
        Self { embedder, entries: BTreeMap::new() }
    }

    pub fn embedder(&self) -> &Arc<dyn Embedder> {
        &self.embedder
    }

    pub fn embed(&self, text: &str) -> Result<EmbeddingVector> {
        Ok(self.embedder.embed(text)?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &str) -> Option<&ActionEntry> {
        self.entries.get(name)
    }

    pub fn entries(&self) -> impl Iterator<Item = &ActionEntry> {
        self.entries.values()
    }

    pub fn by_key(&self, key: &CounterKey) -> Option<&ActionEntry> {
        self.entries.values().find(|e| e.key.as_ref() == Some(key))
    }

    /// Embeds the annotation and inserts a fresh entry.
    pub fn add(
        &mut self,
        name: &str,
        annotation: &str,
        body: ActionSequence,
        provenance: Provenance,
        key: Option<CounterKey>,
    ) -> Result<&ActionEntry> {
        if annotation.trim().is_empty() {
            return Err(VarpError::domain(format!("action `{name}` needs an annotation")));
        }
        let embedding = self.embed(annotation)?;
        self.add_action(ActionEntry {
            name: name.to_string(),
            annotation: annotation.to_string(),
            annotation_embedding: embedding,
            body,
            provenance,
            stats: ActionStats::default(),
            key,
            pattern: None,
            score_history: Vec::new(),
        })
    }

    pub fn add_action(&mut self, entry: ActionEntry) -> Result<&ActionEntry> {
        if entry.annotation.trim().is_empty() {
            return Err(VarpError::domain(format!("action `{}` needs an annotation", entry.name)));
        }
        if entry.name.is_empty() {
            return Err(VarpError::domain("action name is empty"));
        }
        if entry.annotation_embedding.dim() != self.embedder.dim() {
            return Err(VarpError::domain(format!(
                "embedding of `{}` has dimension {}, provider uses {}",
                entry.name,
                entry.annotation_embedding.dim(),
                self.embedder.dim()
            )));
        }
        if self.entries.contains_key(&entry.name) {
            return Err(VarpError::domain(format!("action `{}` already exists", entry.name)));
        }
        let name = entry.name.clone();
        Ok(self.entries.entry(name).or_insert(entry))
    }

    /// Replaces the body and/or annotation and adds to the stats. The
    /// annotation is re-embedded only when its text changes.
    pub fn update_action(
        &mut self,
        name: &str,
        new_body: Option<ActionSequence>,
        new_annotation: Option<&str>,
        stats_delta: ActionStats,
    ) -> Result<()> {
        let embedding = match new_annotation {
            Some(a) if a.trim().is_empty() => return Err(VarpError::domain("annotation cannot be empty")),
            Some(a) if self.entries.get(name).is_some_and(|e| e.annotation != a) => Some(self.embed(a)?),
            _ => None,
        };
        let entry = self
            .entries
            .get_mut(name)
            .ok_or_else(|| VarpError::NotFound(format!("action `{name}`")))?;
        if let Some(b) = new_body {
            entry.body = b;
        }
        if let (Some(a), Some(e)) = (new_annotation, embedding) {
            entry.annotation = a.to_string();
            entry.annotation_embedding = e;
        }
        entry.stats.add(stats_delta);
        Ok(())
    }

    pub(crate) fn get_mut(&mut self, name: &str) -> Result<&mut ActionEntry> {
        self.entries
            .get_mut(name)
            .ok_or_else(|| VarpError::NotFound(format!("action `{name}`")))
    }

    pub fn push_score(&mut self, name: &str, score: f64) -> Result<()> {
        let entry = self
            .entries
            .get_mut(name)
            .ok_or_else(|| VarpError::NotFound(format!("action `{name}`")))?;
        entry.score_history.push(score);
        Ok(())
    }

    /// Exact top-k by cosine similarity, ties broken by ascending name.
    pub fn curate_skills(&self, query: &EmbeddingVector, k: usize, exec: Exec) -> Vec<(ActionEntry, f64)> {
        if k == 0 {
            return Vec::new();
        }
        let all: Vec<&ActionEntry> = self.entries.values().collect();
        let sims = par::map(exec.for_len(all.len()), &all, |e| cosine(query, &e.annotation_embedding));
        let mut scored: Vec<(f64, &ActionEntry)> = sims.into_iter().zip(all).collect();
        let cmp = |a: &(f64, &ActionEntry), b: &(f64, &ActionEntry)| b.0.total_cmp(&a.0).then_with(|| a.1.name.cmp(&b.1.name));
        if scored.len() > k {
            scored.select_nth_unstable_by(k - 1, cmp);
            scored.truncate(k);
        }
        scored.sort_by(cmp);
        scored.into_iter().map(|(s, e)| (e.clone(), s)).collect()
    }

    pub(crate) fn insert_loaded(&mut self, entry: ActionEntry) -> Result<()> {
        self.add_action(entry).map(|_| ())
    }
}
