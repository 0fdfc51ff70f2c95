use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use varp_arena::{ActionSequence, AtomicCommand, EnemyBar, Frame, Hud};
use varp_core::gateway::{EmbeddingVector, LocalTrigramEmbedder, LOCAL_DIM};
use varp_core::guidance::{InputEvent, InputKind};
use varp_core::memory::*;
use varp_core::par::Exec;

pub const LIBRARIES: usize = 100;

pub fn size_for(i: usize, rng: &mut ChaCha8Rng) -> usize {
    // A few libraries at the size cap, the rest small enough to keep debug runs quick.
    if i.is_multiple_of(25) {
        10_000
    } else {
        rng.gen_range(1..=400)
    }
}

pub fn unit(rng: &mut ChaCha8Rng, dim: usize) -> EmbeddingVector {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        if let Ok(e) = EmbeddingVector::normalized(v) {
            return e;
        }
    }
}

pub fn random_library(rng: &mut ChaCha8Rng, size: usize) -> ActionLibrary {
    let mut lib = ActionLibrary::new(Arc::new(LocalTrigramEmbedder::default()));
    let mut pool: Vec<EmbeddingVector> = Vec::new();
    for i in 0..size {
        // Reused vectors give exact ties that only the name can break.
        let emb = if !pool.is_empty() && rng.gen_bool(0.2) {
            pool[rng.gen_range(0..pool.len())].clone()
        } else {
            let e = unit(rng, LOCAL_DIM);
            pool.push(e.clone());
            e
        };
        lib.add_action(ActionEntry {
            name: format!("a{:05}_{}", rng.gen_range(0..100_000), i),
            annotation: format!("action {i}"),
            annotation_embedding: emb,
            body: ActionSequence::new(vec![AtomicCommand::LightAttack]).unwrap(),
            provenance: Provenance::Predefined,
            stats: ActionStats::default(),
            key: None,
            pattern: None,
            score_history: Vec::new(),
        })
        .unwrap();
    }
    lib
}

pub fn oracle_top_k(lib: &ActionLibrary, q: &EmbeddingVector, k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = lib
        .entries()
        .map(|e| {
            let mut dot = 0.0;
            for i in 0..q.values.len() {
                dot += q.values[i] * e.annotation_embedding.values[i];
            }
            (e.name.clone(), dot)
        })
        .collect();
    all.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

const GLYPHS: &[char] = &['@', 'B', 'V', 'w', '*', '$', 'T', '~', '#', '⩓', '➤', '⋔'];

pub fn random_frame(rng: &mut ChaCha8Rng) -> Frame {
    let (w, h) = (48, 24);
    let mut grid = vec![vec!['.'; w]; h];
    for _ in 0..rng.gen_range(1..12) {
        grid[rng.gen_range(0..h)][rng.gen_range(0..w)] = GLYPHS[rng.gen_range(0..GLYPHS.len())];
    }
    let bars = if rng.gen_bool(0.5) { vec![EnemyBar { name: "Bullguard".into(), fraction: rng.gen_range(0.0..=1.0) }] } else { vec![] };
    Frame {
        tick: rng.gen_range(0..3000),
        viewport: grid.into_iter().map(|r| r.into_iter().collect()).collect(),
        hud: Hud {
            hp_fraction: rng.gen_range(0.0..=1.0),
            heal_charges: rng.gen_range(0..=5),
            heavy_charge: rng.gen_range(0..=3),
            spell_ready: rng.gen_bool(0.5),
            enemy_bars: bars,
        },
        notices: vec![],
    }
}

pub fn random_guided(rng: &mut ChaCha8Rng, size: usize) -> (HumanGuidedLibrary, Vec<HumanGuidedRecord>) {
    let mut lib = HumanGuidedLibrary::new();
    let mut recs = Vec::new();
    let sessions = rng.gen_range(1..=8);
    let mut frames: Vec<Frame> = Vec::new();
    for i in 0..size {
        let frame = if !frames.is_empty() && rng.gen_bool(0.15) {
            frames[rng.gen_range(0..frames.len())].clone()
        } else {
            let f = random_frame(rng);
            frames.push(f.clone());
            f
        };
        let r = HumanGuidedRecord {
            session_id: format!("s{}", rng.gen_range(0..sessions)),
            tick: i as u64 * 3 + rng.gen_range(0..3),
            frame_snapshot: frame,
            operation: InputEvent::new(i as u64, InputKind::KeyDown, "KeyD"),
            clean: true,
        };
        lib.add(r.clone()).unwrap();
        recs.push(r);
    }
    recs.sort_by(|a, b| (a.session_id.as_str(), a.tick).cmp(&(b.session_id.as_str(), b.tick)));
    (lib, recs)
}

pub fn oracle_guidance(recs: &[HumanGuidedRecord], q: &Frame, n: usize) -> (usize, Vec<usize>) {
    let qf = frame_features(q);
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in recs.iter().enumerate() {
        let f = frame_features(&r.frame_snapshot);
        let s: f64 = qf.values.iter().zip(&f.values).map(|(a, b)| a * b).sum();
        if best.is_none_or(|(_, bs)| s > bs) {
            best = Some((i, s));
        }
    }
    let a = best.unwrap().0;
    let follow = (a + 1..recs.len()).take_while(|&j| recs[j].session_id == recs[a].session_id).take(n).collect();
    (a, follow)
}

/// Top-k disagreements with the oracle over `LIBRARIES` random libraries, both executors.
pub fn curate_mismatches(seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for i in 0..LIBRARIES {
        let size = size_for(i, &mut rng);
        let lib = random_library(&mut rng, size);
        let names: Vec<String> = lib.entries().map(|e| e.name.clone()).collect();
        let queries = [
            unit(&mut rng, LOCAL_DIM),
            lib.get(&names[rng.gen_range(0..names.len())]).unwrap().annotation_embedding.clone(),
        ];
        for q in &queries {
            let k = rng.gen_range(1..=12);
            let want = oracle_top_k(&lib, q, k);
            for exec in [Exec::Sequential, Exec::Parallel] {
                let got: Vec<(String, f64)> = lib.curate_skills(q, k, exec).into_iter().map(|(e, s)| (e.name, s)).collect();
                if got.len() != want.len()
                    || got.iter().zip(&want).any(|(g, w)| g.0 != w.0 || (g.1 - w.1).abs() > 1e-12)
                {
                    mismatches += 1;
                }
            }
        }
    }
    mismatches
}

/// Anchor or follow-up disagreements with the oracle, same shape as above.
pub fn guidance_mismatches(seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mismatches = 0;
    for i in 0..LIBRARIES {
        let size = if i.is_multiple_of(25) { 10_000 } else { rng.gen_range(1..=200) };
        let (lib, recs) = random_guided(&mut rng, size);
        let stored = recs[rng.gen_range(0..recs.len())].frame_snapshot.clone();
        for q in [random_frame(&mut rng), stored] {
            let n = rng.gen_range(0..=20);
            let (a, follow) = oracle_guidance(&recs, &q, n);
            for exec in [Exec::Sequential, Exec::Parallel] {
                let w = lib.query_guidance(&q, n, exec).unwrap();
                let ok = w.anchor == recs[a]
                    && w.following.len() == follow.len()
                    && w.following.iter().zip(&follow).all(|(r, &j)| *r == recs[j]);
                if !ok {
                    mismatches += 1;
                }
            }
        }
    }
    mismatches
}
