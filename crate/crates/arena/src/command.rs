//! Atomic commands and the bounded sequences built from them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::ArenaError;
use crate::geometry::Direction;

/// Longest sequence a single action may hold.
pub const MAX_SEQUENCE_LEN: usize = 32;

/// The closed set of inputs the player character understands.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtomicCommand {
    LightAttack,
    HeavyAttack,
    Dodge,
    RestoreHealth,
    CastImmobilize,
    Move(Direction),
    Interact,
}

impl AtomicCommand {
    /// Short stable token used in annotations and text transcripts.
    pub fn token(self) -> &'static str {
        match self {
            AtomicCommand::LightAttack => "light_attack",
            AtomicCommand::HeavyAttack => "heavy_attack",
            AtomicCommand::Dodge => "dodge",
            AtomicCommand::RestoreHealth => "restore_health",
            AtomicCommand::CastImmobilize => "cast_immobilize",
            AtomicCommand::Move(Direction::N) => "move_north",
            AtomicCommand::Move(Direction::S) => "move_south",
            AtomicCommand::Move(Direction::E) => "move_east",
            AtomicCommand::Move(Direction::W) => "move_west",
            AtomicCommand::Interact => "interact",
        }
    }

    /// Single-letter code used when printing dodge/attack strings.
    pub fn letter(self) -> char {
        match self {
            AtomicCommand::LightAttack => 'A',
            AtomicCommand::HeavyAttack => 'H',
            AtomicCommand::Dodge => 'D',
            AtomicCommand::RestoreHealth => 'R',
            AtomicCommand::CastImmobilize => 'I',
            AtomicCommand::Move(Direction::N) => 'n',
            AtomicCommand::Move(Direction::S) => 's',
            AtomicCommand::Move(Direction::E) => 'e',
            AtomicCommand::Move(Direction::W) => 'w',
            AtomicCommand::Interact => 'X',
        }
    }
}

impl fmt::Display for AtomicCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

impl FromStr for AtomicCommand {
    type Err = ArenaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "light_attack" => AtomicCommand::LightAttack,
            "heavy_attack" => AtomicCommand::HeavyAttack,
            "dodge" => AtomicCommand::Dodge,
            "restore_health" => AtomicCommand::RestoreHealth,
            "cast_immobilize" => AtomicCommand::CastImmobilize,
            "move_north" => AtomicCommand::Move(Direction::N),
            "move_south" => AtomicCommand::Move(Direction::S),
            "move_east" => AtomicCommand::Move(Direction::E),
            "move_west" => AtomicCommand::Move(Direction::W),
            "interact" => AtomicCommand::Interact,
            other => return Err(ArenaError::UnknownCommand(other.to_string())),
        })
    }
}

/// An ordered list of at most [`MAX_SEQUENCE_LEN`] commands. Empty is a no-op.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<AtomicCommand>", into = "Vec<AtomicCommand>")]
pub struct ActionSequence(Vec<AtomicCommand>);

impl ActionSequence {
    pub fn new(commands: Vec<AtomicCommand>) -> Result<Self, ArenaError> {
        if commands.len() > MAX_SEQUENCE_LEN {
            return Err(ArenaError::SequenceTooLong(commands.len()));
        }
        Ok(Self(commands))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// `n` copies of one command.
    pub fn repeat(cmd: AtomicCommand, n: usize) -> Result<Self, ArenaError> {
        Self::new(vec![cmd; n])
    }

    pub fn commands(&self) -> &[AtomicCommand] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, AtomicCommand> {
        self.0.iter()
    }

    pub fn into_inner(self) -> Vec<AtomicCommand> {
        self.0
    }

    /// Compact letter form, e.g. `DDDDAAAAA`.
    pub fn letters(&self) -> String {
        self.0.iter().map(|c| c.letter()).collect()
    }

    /// Run-length summary such as `dodge x4, light_attack x5`.
    pub fn summary(&self) -> String {
        let mut parts: Vec<String> = Vec::new();
        let mut iter = self.0.iter().peekable();
        while let Some(cmd) = iter.next() {
            let mut n = 1;
            while iter.peek() == Some(&cmd) {
                iter.next();
                n += 1;
            }
            parts.push(format!("{} x{}", cmd.token(), n));
        }
        if parts.is_empty() {
            "no-op".to_string()
        } else {
            parts.join(", ")
        }
    }
}

impl TryFrom<Vec<AtomicCommand>> for ActionSequence {
    type Error = ArenaError;

    fn try_from(value: Vec<AtomicCommand>) -> Result<Self, Self::Error> {
        Self::new(value)
    }
}

impl From<ActionSequence> for Vec<AtomicCommand> {
    fn from(value: ActionSequence) -> Self {
        value.0
    }
}

impl<'a> IntoIterator for &'a ActionSequence {
    type Item = &'a AtomicCommand;
    type IntoIter = std::slice::Iter<'a, AtomicCommand>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn length_cap_enforced() {
        assert!(ActionSequence::repeat(AtomicCommand::Dodge, 32).is_ok());
        assert!(matches!(
            ActionSequence::repeat(AtomicCommand::Dodge, 33),
            Err(ArenaError::SequenceTooLong(33))
        ));
    }

    #[test]
    fn summary_run_length() {
        let mut cmds = vec![AtomicCommand::Dodge; 4];
        cmds.extend(vec![AtomicCommand::LightAttack; 5]);
        let seq = ActionSequence::new(cmds).unwrap();
        assert_eq!(seq.summary(), "dodge x4, light_attack x5");
        assert_eq!(seq.letters(), "DDDDAAAAA");
        assert_eq!(ActionSequence::empty().summary(), "no-op");
    }

    #[test]
    fn token_round_trip() {
        for cmd in [
            AtomicCommand::LightAttack,
            AtomicCommand::HeavyAttack,
            AtomicCommand::Dodge,
            AtomicCommand::RestoreHealth,
            AtomicCommand::CastImmobilize,
            AtomicCommand::Move(Direction::W),
            AtomicCommand::Interact,
        ] {
            assert_eq!(cmd.token().parse::<AtomicCommand>().unwrap(), cmd);
        }
    }

    #[test]
    fn serde_rejects_overlong() {
        let json = format!("[{}]", vec!["\"dodge\""; 33].join(","));
        assert!(serde_json::from_str::<ActionSequence>(&json).is_err());
    }
}
