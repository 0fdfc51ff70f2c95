//! Enemy archetypes and their telegraphed attack patterns.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ArenaError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Archetype {
    Erlang,
    WolfScout,
    WolfStalwart,
    WolfSwornsword,
    WolfSoldier,
    Croaky,
    CrowDiviner,
    Bullguard,
    WanderingWight,
}

impl Archetype {
    pub const ALL: [Archetype; 9] = [
        Archetype::Erlang,
        Archetype::WolfScout,
        Archetype::WolfStalwart,
        Archetype::WolfSwornsword,
        Archetype::WolfSoldier,
        Archetype::Croaky,
        Archetype::CrowDiviner,
        Archetype::Bullguard,
        Archetype::WanderingWight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Archetype::Erlang => "Erlang",
            Archetype::WolfScout => "WolfScout",
            Archetype::WolfStalwart => "WolfStalwart",
            Archetype::WolfSwornsword => "WolfSwornsword",
            Archetype::WolfSoldier => "WolfSoldier",
            Archetype::Croaky => "Croaky",
            Archetype::CrowDiviner => "CrowDiviner",
            Archetype::Bullguard => "Bullguard",
            Archetype::WanderingWight => "WanderingWight",
        }
    }

    /// Lower-case identifier fragment, e.g. `bullguard`, `wolf_scout`.
    pub fn snake(self) -> String {
        let mut out = String::new();
        for (i, ch) in self.name().chars().enumerate() {
            if ch.is_ascii_uppercase() && i > 0 {
                out.push('_');
            }
            out.push(ch.to_ascii_lowercase());
        }
        out
    }
}

impl fmt::Display for Archetype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Archetype {
    type Err = ArenaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Archetype::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| ArenaError::Config(format!("unknown archetype `{s}`")))
    }
}

/// One strike inside a pattern. `offset_ticks` counts from the end of the wind-up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HitWindow {
    pub offset_ticks: u64,
    pub damage_hp: u32,
    pub reach_cells: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AttackPattern {
    pub label: String,
    pub telegraph_ticks: u64,
    pub hit_windows: Vec<HitWindow>,
    pub recovery_ticks: u64,
}

impl AttackPattern {
    pub fn validate(&self) -> Result<(), ArenaError> {
        let fail = |reason: &str| ArenaError::InvalidPattern {
            label: self.label.clone(),
            reason: reason.to_string(),
        };
        if self.telegraph_ticks < 1 {
            return Err(fail("telegraph_ticks must be at least 1"));
        }
        if self.hit_windows.is_empty() {
            return Err(fail("hit_windows must be non-empty"));
        }
        if self.hit_windows.windows(2).any(|w| w[0].offset_ticks >= w[1].offset_ticks) {
            return Err(fail("hit offsets must be strictly increasing"));
        }
        if self.hit_windows.iter().any(|h| h.damage_hp == 0) {
            return Err(fail("damage_hp must be positive"));
        }
        Ok(())
    }

    /// Pattern phase (ticks since onset) at which each hit lands.
    pub fn hit_phases(&self) -> impl Iterator<Item = (u64, &HitWindow)> + '_ {
        self.hit_windows
            .iter()
            .map(move |h| (self.telegraph_ticks + h.offset_ticks, h))
    }

    /// Total length in ticks: wind-up, strikes, and recovery.
    pub fn duration(&self) -> u64 {
        let last = self.hit_windows.last().map_or(0, |h| h.offset_ticks);
        self.telegraph_ticks + last + self.recovery_ticks
    }

    pub fn hit_count(&self) -> usize {
        self.hit_windows.len()
    }

    pub fn max_reach(&self) -> u32 {
        self.hit_windows.iter().map(|h| h.reach_cells).max().unwrap_or(1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pattern(offsets: &[u64]) -> AttackPattern {
        AttackPattern {
            label: "p".into(),
            telegraph_ticks: 2,
            hit_windows: offsets
                .iter()
                .map(|&o| HitWindow { offset_ticks: o, damage_hp: 5, reach_cells: 1 })
                .collect(),
            recovery_ticks: 4,
        }
    }

    #[test]
    fn validation_rules() {
        assert!(pattern(&[0, 2, 6]).validate().is_ok());
        assert!(pattern(&[]).validate().is_err());
        assert!(pattern(&[2, 2]).validate().is_err());
        let mut p = pattern(&[0]);
        p.telegraph_ticks = 0;
        assert!(p.validate().is_err());
        let mut p = pattern(&[0]);
        p.hit_windows[0].damage_hp = 0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn duration_and_phases() {
        let p = pattern(&[0, 2, 6]);
        assert_eq!(p.duration(), 2 + 6 + 4);
        let phases: Vec<u64> = p.hit_phases().map(|(ph, _)| ph).collect();
        assert_eq!(phases, vec![2, 4, 8]);
    }

    #[test]
    fn snake_names() {
        assert_eq!(Archetype::WolfScout.snake(), "wolf_scout");
        assert_eq!(Archetype::Bullguard.snake(), "bullguard");
        assert_eq!("CrowDiviner".parse::<Archetype>().unwrap(), Archetype::CrowDiviner);
    }
}
