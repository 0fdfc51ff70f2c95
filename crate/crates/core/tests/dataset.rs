mod common;

use common::dataset::*;
use varp_arena::TaskStatus;
use varp_core::gateway::{LocalTrigramEmbedder, ScriptedOracle, Trace};
use varp_core::guidance::*;
use varp_core::memory::{ActionLibrary, GuidanceWindow, Provenance};
use varp_core::VarpError;

fn bundled() -> Vec<Session> {
    load_dataset(&bundled_dataset_dir()).unwrap()
}

#[test]
fn clean_sessions_replay_to_recorded_status() {
    let km = Keymap::default();
    let sessions = bundled();
    assert_eq!(sessions.len(), 25);
    for s in sessions.iter().filter(|s| s.header.clean) {
        let r = replay_session(s, &km).unwrap_or_else(|e| panic!("{}: {e}", s.header.session_id));
        assert_eq!(r.status, s.expected_status(), "{}", s.header.session_id);
        assert_eq!(r.status, TaskStatus::Success, "{}", s.header.session_id);
    }
}

#[test]
fn stats_match_hand_counts() {
    let dir = bundled_dataset_dir();
    let (total, clean, per_task) = hand_counts(&dir);
    let stats = compute_stats(&dir).unwrap();
    assert_eq!(stats.total_sessions, total);
    assert_eq!(stats.clean_sessions, clean);
    assert_eq!(stats.per_task.len(), 12);
    for share in &stats.per_task {
        let n = per_task.get(&share.task_id).copied().unwrap_or(0);
        assert_eq!(share.sessions, n, "task {}", share.task_id);
        assert!((share.percent - 100.0 * n as f64 / total as f64).abs() < 1e-9);
    }
    for &(task, n) in BUNDLED_PLAN {
        assert_eq!(per_task[&task], n);
    }
    assert_eq!(stats.per_task[0].reference_percent, Some(4.0));
    assert_eq!(stats.per_task[1].reference_percent, Some(12.5));
    assert_eq!(stats.per_task[2].reference_percent, None);
    assert!(stats.table().contains("total 25 sessions"));
}

#[test]
fn keymap_matches_longhand_rule_on_every_session() {
    let km = Keymap::default();
    for s in bundled() {
        let a = events_to_atomics(&s.events, &km);
        assert_eq!(a.commands, expected_commands(&s.events), "{}", s.header.session_id);
        assert_eq!(a.commands.len() + a.dropped + a.collapsed, s.events.len());
    }
}

#[test]
fn summarize_body_equals_atomics_on_every_window() {
    let km = Keymap::default();
    let sessions = bundled();
    let guided = build_guided_library(&sessions, &km).unwrap();
    let records = guided.records();
    let oracle = ScriptedOracle::infallible();
    let mut lib = ActionLibrary::new(std::sync::Arc::new(LocalTrigramEmbedder::default()));
    let mut windows = 0;
    for (i, anchor) in records.iter().enumerate() {
        let following: Vec<_> = records[i + 1..]
            .iter()
            .take_while(|r| r.session_id == anchor.session_id)
            .take(varp_core::memory::DEFAULT_N)
            .cloned()
            .collect();
        let w = GuidanceWindow { anchor: anchor.clone(), following };
        let entry = summarize_to_action(&w, &oracle, &mut lib, &km, Trace::default()).unwrap();
        assert_eq!(entry.body.commands(), expected_commands(&w.operations()).as_slice());
        assert_eq!(entry.provenance, Provenance::HumanGuided);
        assert!(entry.name.starts_with("human_guided_"));
        windows += 1;
    }
    assert_eq!(windows, records.len());
    assert_eq!(lib.len(), records.len());
}

#[test]
fn regeneration_reproduces_bundled_files() {
    let dir = tempfile::tempdir().unwrap();
    let paths = generate_dataset(dir.path(), BUNDLED_PLAN).unwrap();
    assert_eq!(paths.len(), 25);
    for p in paths {
        let name = p.file_name().unwrap();
        let fresh = std::fs::read_to_string(&p).unwrap();
        let shipped = std::fs::read_to_string(bundled_dataset_dir().join(name)).unwrap();
        assert!(fresh == shipped, "{name:?} differs from the shipped copy");
    }
}

#[test]
fn tampered_keyframe_names_its_tick() {
    let km = Keymap::default();
    let mut s = bundled().into_iter().find(|s| s.header.task_id == 2).unwrap();
    let (tick, frame, _) = &mut s.keyframes[1];
    frame.viewport[1].replace_range(1..2, "#");
    let tick = *tick;
    match replay_session(&s, &km) {
        Err(VarpError::Integrity { tick: t, .. }) => assert_eq!(t, tick),
        other => panic!("{other:?}"),
    }
}

#[test]
fn missing_end_line_means_timeout() {
    let km = Keymap::default();
    let mut s = bundled().into_iter().find(|s| s.header.task_id == 3).unwrap();
    let last_kf = s.keyframes.last().unwrap().0;
    s.end = None;
    s.keyframes.retain(|k| k.0 < last_kf);
    let cut = s.keyframes.last().unwrap().0;
    s.events.retain(|e| e.tick < cut);
    assert_eq!(s.expected_status(), TaskStatus::Failure(varp_arena::FailureReason::Timeout));
    let text = s.to_text();
    let back = Session::parse(&text).unwrap();
    assert_eq!(back.end, None);
    assert_eq!(replay_session(&back, &km).unwrap().status, TaskStatus::Failure(varp_arena::FailureReason::Timeout));
}

#[test]
fn text_round_trip() {
    for s in bundled() {
        let back = Session::parse(&s.to_text()).unwrap();
        assert_eq!(back, s);
    }
}

#[test]
fn duplicate_session_id_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let s = bundled().remove(0);
    s.save(dir.path()).unwrap();
    assert!(s.save(dir.path()).is_err());
}

#[test]
fn recorder_enforces_tick_order() {
    let s = bundled().remove(0);
    let mut rec = SessionRecorder::new(s.header.clone());
    rec.event(InputEvent::new(5, InputKind::KeyDown, "KeyD")).unwrap();
    assert!(rec.event(InputEvent::new(4, InputKind::KeyDown, "KeyD")).is_err());
}

#[test]
fn guided_library_only_holds_mapped_inputs() {
    let km = Keymap::default();
    let guided = build_guided_library(&bundled(), &km).unwrap();
    assert!(!guided.is_empty());
    for r in guided.records() {
        assert!(km.command(&r.operation).is_some());
        assert!(r.clean);
    }
}
