use serde::{Deserialize, Serialize};
use varp_arena::Frame;

use super::features::{frame_features, FeatureVector};
use crate::error::{Result, VarpError};
use crate::guidance::InputEvent;
use crate::par::{self, Exec};

pub const DEFAULT_N: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HumanGuidedRecord {
    pub session_id: String,
    pub tick: u64,
    pub frame_snapshot: Frame,
    pub operation: InputEvent,
    pub clean: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuidanceWindow {
    pub anchor: HumanGuidedRecord,
    pub following: Vec<HumanGuidedRecord>,
}

impl GuidanceWindow {
    /// Anchor operation first, then the following ones.
    pub fn operations(&self) -> Vec<InputEvent> {
        std::iter::once(&self.anchor)
            .chain(&self.following)
            .map(|r| r.operation.clone())
            .collect()
    }
}

/// (frame, input) pairs from recorded play, kept sorted by (session, tick).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct HumanGuidedLibrary {
    records: Vec<HumanGuidedRecord>,
    features: Vec<FeatureVector>,
}

impl HumanGuidedLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, record: HumanGuidedRecord) -> Result<()> {
        let key = (record.session_id.as_str(), record.tick);
        let at = self
            .records
            .binary_search_by(|r| (r.session_id.as_str(), r.tick).cmp(&key));
        match at {
            Ok(_) => Err(VarpError::domain(format!(
                "record ({}, {}) already present",
                record.session_id, record.tick
            ))),
            Err(i) => {
                self.features.insert(i, frame_features(&record.frame_snapshot));
                self.records.insert(i, record);
                Ok(())
            }
        }
    }

    pub fn records(&self) -> &[HumanGuidedRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Anchor = most similar stored frame (earliest (session, tick) on ties),
    /// plus up to `n` records that follow it in the same session.
    pub fn query_guidance(&self, frame: &Frame, n: usize, exec: Exec) -> Result<GuidanceWindow> {
        if self.records.is_empty() {
            return Err(VarpError::NotFound("human-guided library is empty".into()));
        }
        let q = frame_features(frame);
        let sims = par::map(exec.for_len(self.features.len()), &self.features, |f| q.cosine(f));
        let mut best = 0;
        for (i, s) in sims.iter().enumerate() {
            if *s > sims[best] {
                best = i;
            }
        }
        let anchor = self.records[best].clone();
        let following = self.records[best + 1..]
            .iter()
            .take_while(|r| r.session_id == anchor.session_id)
            .take(n)
            .cloned()
            .collect();
        Ok(GuidanceWindow { anchor, following })
    }
}
