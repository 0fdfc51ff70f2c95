use proptest::prelude::*;
use varp_arena::TaskStatus;
use varp_core::bench::*;
use varp_core::gateway::ScriptedOracle;

fn small() -> BenchConfig {
    BenchConfig { tasks: vec![1, 3, 9, 10], trials: 2, ..BenchConfig::default() }
}

fn report() -> BenchReport {
    run_benchmark(&small()).unwrap()
}

#[test]
fn thread_count_does_not_change_results() {
    let libs = local_libraries().unwrap();
    let oracle = ScriptedOracle::new(0.02, 0.15);
    let one = run_benchmark_with(&BenchConfig { parallelism: Some(1), ..small() }, &libs, &oracle).unwrap();
    let four = run_benchmark_with(&BenchConfig { parallelism: Some(4), ..small() }, &libs, &oracle).unwrap();
    let mut a = one.without_wall_time();
    let mut b = four.without_wall_time();
    a.config.parallelism = None;
    b.config.parallelism = None;
    assert_eq!(a, b);
    let order: Vec<(u8, u32)> = one.trials.iter().map(|t| (t.task_id, t.trial_index)).collect();
    let mut sorted = order.clone();
    sorted.sort();
    assert_eq!(order, sorted);
}

#[test]
fn repeated_runs_render_identically() {
    let a = render_report(&report().without_wall_time(), ReportFormat::Structured).unwrap();
    let b = render_report(&report().without_wall_time(), ReportFormat::Structured).unwrap();
    assert_eq!(a, b);
}

#[test]
fn summaries_agree_with_trials() {
    let r = report();
    assert_eq!(r.trials.len(), 8);
    for t in &r.tasks {
        let rows: Vec<_> = r.trials.iter().filter(|x| x.task_id == t.task_id).collect();
        assert_eq!(t.trials as usize, rows.len());
        assert_eq!(t.successes as usize, rows.iter().filter(|x| x.status == TaskStatus::Success).count());
        let ticks: u64 = rows.iter().map(|x| x.ticks).sum();
        assert!((t.mean_ticks - ticks as f64 / rows.len() as f64).abs() < 1e-9);
    }
    for (i, t) in r.trials.iter().enumerate() {
        assert_eq!(t.seed, 1000 + u64::from(t.trial_index), "row {i}");
    }
    let ops: u64 = r.trials.iter().map(|t| t.atomic_ops_count).sum();
    let inf: u64 = r.trials.iter().map(|t| t.inference_count).sum();
    assert!((r.atomic_ops_per_inference - ops as f64 / inf as f64).abs() < 1e-9);
    // Only task 9 of the headline set is in this run.
    assert_eq!(r.combat_easy_medium_success, Some(r.task(9).unwrap().success_rate));
}

#[test]
fn csv_has_one_row_per_trial() {
    let r = report();
    let csv = render_report(&r, ReportFormat::Csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), r.trials.len() + 1);
    let cols = CSV_HEADER.split(',').count();
    for l in &lines[1..] {
        assert_eq!(l.split(',').count(), cols, "{l}");
    }
}

#[test]
fn structured_output_validates_and_round_trips() {
    let r = report();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    emit_report(&r, ReportFormat::Structured, &path).unwrap();
    let value: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let schema = jsonschema::JSONSchema::compile(&report_schema()).unwrap();
    if let Err(errors) = schema.validate(&value) {
        panic!("{:?}", errors.map(|e| e.to_string()).collect::<Vec<_>>());
    }
    assert_eq!(load_report(&path).unwrap(), r);
    assert!(value["config"]["backend"].get("api_key").is_none_or(|k| k.is_null()));
}

#[test]
fn table_lists_every_task() {
    let r = report();
    let table = render_report(&r, ReportFormat::Table).unwrap();
    for t in &r.tasks {
        assert!(table.lines().any(|l| l.trim_start().starts_with(&format!("{} ", t.task_id)) && l.contains(&t.name)));
    }
    assert!(table.contains("atomic ops per inference"));
}

#[test]
fn ablation_reports_every_variant() {
    let base = BenchConfig { tasks: vec![9, 10], trials: 2, ..BenchConfig::default() };
    let a = run_ablation_suite(&base).unwrap();
    assert_eq!(a.runs.len(), 4);
    assert_eq!(a.deltas.len(), 3 * 2);
    for d in &a.deltas {
        let full = a.run(Variant::Full).unwrap().task(d.task_id).unwrap();
        let var = a.run(d.variant).unwrap().task(d.task_id).unwrap();
        assert_eq!(d.extra_failures, i64::from(full.successes) - i64::from(var.successes));
        assert!((d.success_delta - (var.success_rate - full.success_rate)).abs() < 1e-12);
    }
    assert!(a.extra_failures(Variant::NoSoag, &[9, 10]) >= 0);
    let table = a.table();
    assert!(table.starts_with("task"));
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn bad_configs_are_rejected() {
    for c in [
        BenchConfig { trials: 0, ..BenchConfig::default() },
        BenchConfig { tasks: vec![], ..BenchConfig::default() },
        BenchConfig { tasks: vec![0], ..BenchConfig::default() },
        BenchConfig { parallelism: Some(0), ..BenchConfig::default() },
    ] {
        assert!(run_benchmark(&c).is_err());
    }
    assert!("xml".parse::<ReportFormat>().is_err());
    assert_eq!("json".parse::<ReportFormat>().unwrap(), ReportFormat::Structured);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn thread_default_is_bounded(tasks in 1usize..13, trials in 1u32..10) {
        let c = BenchConfig { tasks: (1..=tasks as u8).collect(), trials, ..BenchConfig::default() };
        prop_assert_eq!(c.threads(), DEFAULT_MAX_THREADS.min(tasks * trials as usize));
    }
}
