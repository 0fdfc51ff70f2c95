use std::path::Path;

use serde::{Deserialize, Serialize};

use super::session::load_dataset;
use crate::error::Result;

/// Published shares of the original dataset, where known (percent).
pub const REFERENCE_SHARES: &[(u8, f64)] = &[(1, 4.0), (2, 12.5)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskShare {
    pub task_id: u8,
    pub sessions: usize,
    pub percent: f64,
    pub reference_percent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total_sessions: usize,
    pub clean_sessions: usize,
    pub clean_fraction: f64,
    pub per_task: Vec<TaskShare>,
}

impl DatasetStats {
    pub fn table(&self) -> String {
        let mut s = format!("{:>4} {:>8} {:>8} {:>10}\n", "task", "sessions", "percent", "reference");
        for t in &self.per_task {
            let reference = t.reference_percent.map_or("-".to_string(), |r| format!("{r:.1}"));
            s.push_str(&format!("{:>4} {:>8} {:>8.1} {:>10}\n", t.task_id, t.sessions, t.percent, reference));
        }
        s.push_str(&format!(
            "total {} sessions, {} clean ({:.1}%)\n",
            self.total_sessions,
            self.clean_sessions,
            self.clean_fraction * 100.0
        ));
        s
    }
}

pub fn compute_stats(dir: &Path) -> Result<DatasetStats> {
    let sessions = load_dataset(dir)?;
    let total = sessions.len();
    let clean = sessions.iter().filter(|s| s.header.clean).count();
    let per_task = (1..=12u8)
        .map(|task_id| {
            let n = sessions.iter().filter(|s| s.header.task_id == task_id).count();
            TaskShare {
                task_id,
                sessions: n,
                percent: if total == 0 { 0.0 } else { 100.0 * n as f64 / total as f64 },
                reference_percent: REFERENCE_SHARES.iter().find(|(t, _)| *t == task_id).map(|(_, p)| *p),
            }
        })
        .collect();
    Ok(DatasetStats {
        total_sessions: total,
        clean_sessions: clean,
        clean_fraction: if total == 0 { 0.0 } else { clean as f64 / total as f64 },
        per_task,
    })
}
