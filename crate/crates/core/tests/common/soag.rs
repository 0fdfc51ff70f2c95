use varp_arena::{ArenaConfig, Archetype, AtomicCommand, AttackPattern};
use varp_core::soag::{rollout, score, OptimizeConfig};

const D: AtomicCommand = AtomicCommand::Dodge;
const A: AtomicCommand = AtomicCommand::LightAttack;

/// The five authored patterns with at most three hit windows.
pub const SHORT_PATTERNS: [(Archetype, &str); 5] = [
    (Archetype::Bullguard, "triple_chop"),
    (Archetype::Bullguard, "charge_forward"),
    (Archetype::WolfSwornsword, "double_slash"),
    (Archetype::CrowDiviner, "feather_volley"),
    (Archetype::CrowDiviner, "dive"),
];

pub fn pattern(a: Archetype, label: &str) -> AttackPattern {
    ArenaConfig::bundled().pattern(a, label).unwrap().pattern.clone()
}

/// Every D/A string up to `max_len`, scored by playing it out. Ties go to the
/// shorter string, then the one that sorts first with D before A.
pub fn oracle(a: Archetype, p: &AttackPattern, max_len: usize) -> (Vec<AtomicCommand>, f64) {
    fn walk(prefix: &mut Vec<AtomicCommand>, left: usize, out: &mut Vec<Vec<AtomicCommand>>) {
        out.push(prefix.clone());
        if left == 0 {
            return;
        }
        for c in [D, A] {
            prefix.push(c);
            walk(prefix, left - 1, out);
            prefix.pop();
        }
    }
    let mut all = Vec::new();
    walk(&mut Vec::new(), max_len, &mut all);
    let cfg = OptimizeConfig::default();
    let mut best: Option<(Vec<AtomicCommand>, f64)> = None;
    for body in all {
        let s = score(&rollout(a, p, &body), &cfg);
        let key = |b: &[AtomicCommand]| (b.len(), b.iter().map(|c| c.letter()).collect::<String>());
        let take = match &best {
            None => true,
            Some((bb, bs)) => s > *bs || (s == *bs && key(&body) < key(bb)),
        };
        if take {
            best = Some((body, s));
        }
    }
    best.unwrap()
}

