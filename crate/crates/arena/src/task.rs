//! The twelve benchmark tasks and their terminal conditions.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pattern::Archetype;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Difficulty {
    Easy,
    Middle,
    Hard,
    VeryHard,
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Difficulty::Easy => "Easy",
            Difficulty::Middle => "Middle",
            Difficulty::Hard => "Hard",
            Difficulty::VeryHard => "Very Hard",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Success when every enemy is at 0 hp.
    Combat,
    /// Success when every gatherable item has been picked up.
    Gather,
    /// Success when every chest is open.
    Open,
    /// Success when the player stands next to the goal enemy.
    Navigate,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub task_id: u8,
    pub name: String,
    pub description: String,
    pub difficulty: Difficulty,
    pub kind: TaskKind,
    pub tick_budget: u64,
    pub enemy: Option<Archetype>,
}

impl TaskSpec {
    pub fn success_condition(&self) -> String {
        match self.kind {
            TaskKind::Combat => "all enemies reduced to 0 hp".into(),
            TaskKind::Gather => "every gatherable item collected".into(),
            TaskKind::Open => "every chest opened".into(),
            TaskKind::Navigate => "player adjacent to the goal enemy".into(),
        }
    }

    pub fn failure_condition(&self) -> String {
        format!("player hp reaches 0, or tick exceeds {}", self.tick_budget)
    }

    pub fn is_combat(&self) -> bool {
        self.kind == TaskKind::Combat
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureReason {
    PlayerKilled,
    Timeout,
    StepCap,
    Backend,
}

impl fmt::Display for FailureReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FailureReason::PlayerKilled => "player_killed",
            FailureReason::Timeout => "timeout",
            FailureReason::StepCap => "step_cap",
            FailureReason::Backend => "backend",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "status", content = "reason")]
pub enum TaskStatus {
    Ongoing,
    Success,
    Failure(FailureReason),
}

impl TaskStatus {
    pub fn is_terminal(self) -> bool {
        !matches!(self, TaskStatus::Ongoing)
    }
}

impl fmt::Display for TaskStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TaskStatus::Ongoing => f.write_str("ongoing"),
            TaskStatus::Success => f.write_str("success"),
            TaskStatus::Failure(r) => write!(f, "failure({r})"),
        }
    }
}
