//! One PASS/FAIL line per acceptance criterion. Exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use varp_arena::{Archetype, AtomicCommand, TaskStatus};
use varp_core::bench::*;
use varp_core::gateway::{cosine, Embedder, LocalTrigramEmbedder, ScriptedOracle, SchemaId, Trace};
use varp_core::guidance::*;
use varp_core::memory::{ActionLibrary, GuidanceWindow, DEFAULT_N};
use varp_core::soag::{optimize_counter, rollout, synthesize_counter, OptimizeConfig};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn rate(r: &BenchReport, task: u8) -> f64 {
    r.task(task).map_or(0.0, |t| t.success_rate)
}

fn benchmark(ab: &AblationReport) -> Outcome {
    let full = ab.run(Variant::Full).ok_or("no full run")?;
    let off = ab.run(Variant::NoGuidance).ok_or("no guidance-off run")?;
    ensure(full.trials.len() == 60, format!("{} trials, want 60", full.trials.len()))?;
    ensure(full.wall_seconds < 300.0, format!("took {:.1}s", full.wall_seconds))?;
    for t in 1..=8 {
        ensure(rate(full, t) == 1.0, format!("task {t} at {:.0}%", 100.0 * rate(full, t)))?;
    }
    let headline = full.combat_easy_medium_success.ok_or("no combat headline")?;
    ensure(headline >= 0.9, format!("combat easy/medium at {:.0}%", 100.0 * headline))?;
    ensure(rate(off, 12) == 0.0, format!("task 12 without guidance at {:.0}%", 100.0 * rate(off, 12)))?;
    ensure(rate(full, 12) >= 0.4, format!("task 12 with guidance at {:.0}%", 100.0 * rate(full, 12)))?;
    Ok(format!(
        "{:.1}s, combat easy/medium {:.0}%, task 12 {:.0}% -> {:.0}% with guidance",
        full.wall_seconds,
        100.0 * headline,
        100.0 * rate(off, 12),
        100.0 * rate(full, 12)
    ))
}

fn ablation(ab: &AblationReport) -> Outcome {
    let full = ab.run(Variant::Full).ok_or("no full run")?;
    let no_soag = ab.run(Variant::NoSoag).ok_or("no soag-off run")?;
    for t in [9, 10] {
        ensure(
            no_soag.successes(t) < full.successes(t),
            format!("task {t}: {} without soag vs {} full", no_soag.successes(t), full.successes(t)),
        )?;
    }
    let easy: Vec<u8> = (1..=8).collect();
    let extra = ab.extra_failures(Variant::NoDtsa, &easy);
    ensure(extra >= 1, format!("no-dtsa adds {extra} failures on easy tasks"))?;
    ensure(ab.deltas.len() == 3 * full.tasks.len(), "delta table incomplete")?;
    Ok(format!(
        "no-soag 9: {}->{}, 10: {}->{}; no-dtsa +{extra} easy failures",
        full.successes(9),
        no_soag.successes(9),
        full.successes(10),
        no_soag.successes(10)
    ))
}

fn soag_near_optimal() -> Outcome {
    let started = Instant::now();
    let cfg = OptimizeConfig::default();
    let mut worst = f64::INFINITY;
    for (a, label) in common::soag::SHORT_PATTERNS {
        let p = common::soag::pattern(a, label);
        ensure(p.hit_windows.len() <= 3, format!("{label} has {} hit windows", p.hit_windows.len()))?;
        let (_, best) = common::soag::oracle(a, &p, 8);
        let mut body = synthesize_counter(p.hit_windows.len(), &cfg);
        let mut s = f64::NEG_INFINITY;
        for step in 0..20 {
            let (b, sc) = optimize_counter(a, &p, &body, &cfg, step);
            body = b;
            s = sc;
        }
        ensure(s >= best - 0.05 * best.abs(), format!("{label}: {s:.3} vs optimum {best:.3}"))?;
        if best != 0.0 {
            worst = worst.min(s / best);
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 30.0, format!("took {secs:.1}s"))?;
    Ok(format!("5 patterns, worst ratio to optimum {worst:.3}, {secs:.2}s"))
}

fn triple_chop_seed() -> Outcome {
    let seed = synthesize_counter(3, &OptimizeConfig::default());
    let mut want = vec![AtomicCommand::Dodge; 4];
    want.extend([AtomicCommand::LightAttack; 5]);
    ensure(seed.commands() == want.as_slice(), format!("seed is {seed:?}"))?;
    let out = rollout(Archetype::Bullguard, &common::soag::pattern(Archetype::Bullguard, "triple_chop"), seed.commands());
    ensure(out.hits_taken == 0, format!("seed takes {} hits", out.hits_taken))?;
    Ok("D D D D A A A A A, 0 hits taken".into())
}

fn retrieval() -> Outcome {
    let curate = common::retrieval::curate_mismatches(7);
    let guidance = common::retrieval::guidance_mismatches(11);
    ensure(curate == 0, format!("{curate} curate_skills mismatches"))?;
    ensure(guidance == 0, format!("{guidance} query_guidance mismatches"))?;
    let e = LocalTrigramEmbedder::default();
    let mut worst: f64 = 0.0;
    for text in ["dodge twice then attack", "counter for Bullguard triple_chop", "walk to the chest", "x"] {
        let v = e.embed(text).map_err(|e| e.to_string())?;
        worst = worst.max((cosine(&v, &v) - 1.0).abs());
    }
    ensure(worst <= 1e-9, format!("self-similarity off by {worst:e}"))?;
    Ok(format!("{} libraries each, self-similarity within {worst:.1e}", common::retrieval::LIBRARIES))
}

fn determinism(ab: &AblationReport) -> Outcome {
    let full = ab.run(Variant::Full).ok_or("no full run")?;
    let again = run_benchmark(&BenchConfig::default()).map_err(|e| e.to_string())?;
    let a = render_report(&full.without_wall_time(), ReportFormat::Structured).map_err(|e| e.to_string())?;
    let b = render_report(&again.without_wall_time(), ReportFormat::Structured).map_err(|e| e.to_string())?;
    ensure(a == b, "structured reports differ")?;
    Ok(format!("{} bytes identical", a.len()))
}

fn dataset() -> Outcome {
    let km = Keymap::default();
    let dir = bundled_dataset_dir();
    let sessions = load_dataset(&dir).map_err(|e| e.to_string())?;
    let mut replayed = 0;
    for s in sessions.iter().filter(|s| s.header.clean) {
        let r = replay_session(s, &km).map_err(|e| format!("{}: {e}", s.header.session_id))?;
        ensure(r.status == s.expected_status(), format!("{} replayed to {:?}", s.header.session_id, r.status))?;
        replayed += 1;
    }

    let (total, clean, per_task) = common::dataset::hand_counts(&dir);
    let stats = compute_stats(&dir).map_err(|e| e.to_string())?;
    ensure(stats.total_sessions == total && stats.clean_sessions == clean, "session totals differ")?;
    for share in &stats.per_task {
        let n = per_task.get(&share.task_id).copied().unwrap_or(0);
        ensure(share.sessions == n, format!("task {} counted {} vs {n}", share.task_id, share.sessions))?;
    }

    let guided = build_guided_library(&sessions, &km).map_err(|e| e.to_string())?;
    let records = guided.records();
    let oracle = ScriptedOracle::infallible();
    let mut lib = ActionLibrary::new(Arc::new(LocalTrigramEmbedder::default()));
    for (i, anchor) in records.iter().enumerate() {
        let following: Vec<_> =
            records[i + 1..].iter().take_while(|r| r.session_id == anchor.session_id).take(DEFAULT_N).cloned().collect();
        let w = GuidanceWindow { anchor: anchor.clone(), following };
        let entry = summarize_to_action(&w, &oracle, &mut lib, &km, Trace::default()).map_err(|e| e.to_string())?;
        let direct = events_to_atomics(&w.operations(), &km);
        ensure(entry.body.commands() == direct.commands.as_slice(), format!("window {i} body differs"))?;
        ensure(entry.body.commands() == common::dataset::expected_commands(&w.operations()).as_slice(), format!("window {i} breaks the keymap rule"))?;
    }
    Ok(format!("{replayed} clean replays, {total} sessions counted, {} windows", records.len()))
}

fn wire() -> Outcome {
    let (requests, seen) = common::wire::stub_episodes()?;
    for id in [SchemaId::Reflection, SchemaId::TaskInference, SchemaId::Integration, SchemaId::EnemyAction, SchemaId::MonolithicDecision, SchemaId::GuidanceSummary] {
        ensure(seen.contains(&id), format!("{id} never sent"))?;
    }
    let (count, attempts) = common::wire::rate_limited_call()?;
    ensure(count as usize == attempts && attempts == 3, format!("request_count {count} for {attempts} attempts"))?;
    Ok(format!("{requests} valid requests over {} schemas, 429 path request_count {count}", seen.len()))
}

fn metric(ab: &AblationReport) -> Outcome {
    let full = ab.run(Variant::Full).ok_or("no full run")?;
    let worst = full.trials.iter().filter(|t| t.task_id == 3).map(|t| t.inference_count).max().ok_or("no task 3 trials")?;
    ensure(worst <= 3, format!("task 3 took {worst} inferences"))?;
    ensure(full.trials.iter().filter(|t| t.task_id == 3).all(|t| t.status == TaskStatus::Success), "task 3 failed")?;
    Ok(format!("task 3 max {worst} inferences, {:.2} atomic ops per inference", full.atomic_ops_per_inference))
}

fn main() -> ExitCode {
    let mut failed = 0;
    let mut report = |n: u32, name: &str, f: &mut dyn FnMut() -> Outcome| {
        let out = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        match out {
            Ok(detail) => println!("PASS {n} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {n} {name}: {detail}");
            }
        }
    };

    let ab = run_ablation_suite(&BenchConfig::default());
    let ab = match ab {
        Ok(ab) => Some(ab),
        Err(e) => {
            println!("ablation suite did not run: {e}");
            None
        }
    };
    let with = |f: fn(&AblationReport) -> Outcome| {
        let ab = ab.as_ref();
        move || ab.map_or_else(|| Err("no ablation report".to_string()), f)
    };

    report(1, "benchmark", &mut with(benchmark));
    report(2, "ablation", &mut with(ablation));
    if let Some(ab) = &ab {
        println!("{}", ab.table().trim_end());
    }
    report(3, "soag near-optimal", &mut soag_near_optimal);
    report(4, "triple_chop seed", &mut triple_chop_seed);
    report(5, "retrieval", &mut retrieval);
    report(6, "determinism", &mut with(determinism));
    report(7, "dataset", &mut dataset);
    report(8, "wire", &mut wire);
    report(9, "metric", &mut with(metric));

    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
