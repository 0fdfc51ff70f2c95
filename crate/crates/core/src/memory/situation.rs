use serde::{Deserialize, Serialize};
use varp_arena::{ExecOutcome, Frame};

use crate::agent::{GatheredInfo, ReflectionVerdict};
use crate::error::{Result, VarpError};

pub const DEFAULT_M: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SituationRecord {
    pub step_index: u64,
    pub task_id: u8,
    pub keyframes: Vec<Frame>,
    pub gathered: GatheredInfo,
    pub reflection: ReflectionVerdict,
    pub task_description: String,
    pub chosen_action: String,
    pub outcome: ExecOutcome,
}

/// Step-by-step memory of one episode.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SituationLibrary {
    records: Vec<SituationRecord>,
}

impl SituationLibrary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append_situation(&mut self, record: SituationRecord) -> Result<()> {
        if let Some(last) = self.records.last() {
            if record.step_index <= last.step_index {
                return Err(VarpError::domain(format!(
                    "step {} does not follow step {}",
                    record.step_index, last.step_index
                )));
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// The last `m` keyframes across all records, newest last.
    pub fn recent_frames(&self, m: usize) -> Vec<Frame> {
        let mut out: Vec<Frame> = self
            .records
            .iter()
            .rev()
            .flat_map(|r| r.keyframes.iter().rev())
            .take(m)
            .cloned()
            .collect();
        out.reverse();
        out
    }

    pub fn records(&self) -> &[SituationRecord] {
        &self.records
    }

    pub fn last(&self) -> Option<&SituationRecord> {
        self.records.last()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
