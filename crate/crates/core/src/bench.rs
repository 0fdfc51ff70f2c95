//! The 12-task benchmark: trials, ablations and report output.
//!
//! Trial `i` of every task runs with seed `base_seed + i`, whatever the task
//! subset or thread count. Each trial starts from its own copy of the
//! libraries, and results are folded in (task, trial) order, so a report is
//! the same byte for byte apart from the wall-clock fields.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use varp_arena::{ArenaConfig, Difficulty, FailureReason, TaskStatus};

use crate::agent::{run_episode, seed_library, AgentConfig, Libraries};
use crate::error::{Result, VarpError};
use crate::gateway::{Backend, BackendConfig, Embedder, LocalTrigramEmbedder};
use crate::guidance::{build_guided_library, bundled_dataset_dir, load_dataset, Keymap};
use crate::par;

pub const REPORT_VERSION: u32 = 1;
/// Parallel trials never exceed this unless asked for explicitly.
pub const DEFAULT_MAX_THREADS: usize = 4;
/// Tasks whose combined success rate is the headline number.
pub const COMBAT_EASY_MEDIUM: [u8; 6] = [2, 4, 5, 7, 8, 9];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub tasks: Vec<u8>,
    pub trials: u32,
    pub base_seed: u64,
    pub agent: AgentConfig,
    pub backend: BackendConfig,
    /// Worker threads; `None` means min(4, number of trials overall).
    pub parallelism: Option<usize>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            tasks: (1..=12).collect(),
            trials: 5,
            base_seed: 1000,
            agent: AgentConfig::default(),
            backend: BackendConfig::default(),
            parallelism: None,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(VarpError::domain("trials must be at least 1"));
        }
        if self.tasks.is_empty() {
            return Err(VarpError::domain("no tasks selected"));
        }
        let arena = ArenaConfig::bundled();
        for t in &self.tasks {
            if arena.task(*t).is_none() {
                return Err(VarpError::domain(format!("unknown task {t}")));
            }
        }
        if self.parallelism == Some(0) {
            return Err(VarpError::domain("parallelism must be at least 1"));
        }
        self.agent.validate()?;
        self.backend.validate()?;
        Ok(())
    }

    pub fn seed(&self, trial_index: u32) -> u64 {
        self.base_seed + u64::from(trial_index)
    }

    pub fn threads(&self) -> usize {
        let total = self.tasks.len() * self.trials as usize;
        self.parallelism.unwrap_or_else(|| DEFAULT_MAX_THREADS.min(total)).max(1)
    }

    /// Copy safe to write into a report: credentials are dropped.
    pub fn echo(&self) -> BenchConfig {
        let mut c = self.clone();
        c.backend.api_key = None;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub task_id: u8,
    pub trial_index: u32,
    pub seed: u64,
    pub status: TaskStatus,
    pub ticks: u64,
    pub inference_count: u64,
    pub atomic_ops_count: u64,
    pub wall_seconds: f64,
}

impl TrialResult {
    pub fn succeeded(&self) -> bool {
        self.status == TaskStatus::Success
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub task_id: u8,
    pub name: String,
    pub difficulty: Difficulty,
    pub trials: u32,
    pub successes: u32,
    pub success_rate: f64,
    pub mean_ticks: f64,
    pub mean_inference_count: f64,
    pub mean_atomic_ops: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub version: u32,
    pub config: BenchConfig,
    pub tasks: Vec<TaskSummary>,
    pub trials: Vec<TrialResult>,
    /// Total atomic operations over total decisions.
    pub atomic_ops_per_inference: f64,
    /// Success rate over the easy and medium combat tasks present in the run.
    pub combat_easy_medium_success: Option<f64>,
    pub wall_seconds: f64,
}

impl BenchReport {
    pub fn task(&self, task_id: u8) -> Option<&TaskSummary> {
        self.tasks.iter().find(|t| t.task_id == task_id)
    }

    pub fn successes(&self, task_id: u8) -> u32 {
        self.task(task_id).map_or(0, |t| t.successes)
    }

    /// The same report with every wall-clock field zeroed.
    pub fn without_wall_time(&self) -> BenchReport {
        let mut r = self.clone();
        r.wall_seconds = 0.0;
        for t in &mut r.trials {
            t.wall_seconds = 0.0;
        }
        r
    }
}

fn mean(xs: impl Iterator<Item = u64>, n: u32) -> f64 {
    xs.sum::<u64>() as f64 / f64::from(n.max(1))
}

fn summarize(config: &BenchConfig, trials: &[TrialResult]) -> Vec<TaskSummary> {
    let arena = ArenaConfig::bundled();
    config
        .tasks
        .iter()
        .map(|&task_id| {
            let rows: Vec<&TrialResult> = trials.iter().filter(|t| t.task_id == task_id).collect();
            let n = rows.len() as u32;
            let successes = rows.iter().filter(|t| t.succeeded()).count() as u32;
            let def = arena.task(task_id).expect("validated");
            TaskSummary {
                task_id,
                name: def.name.clone(),
                difficulty: def.difficulty,
                trials: n,
                successes,
                success_rate: f64::from(successes) / f64::from(n.max(1)),
                mean_ticks: mean(rows.iter().map(|t| t.ticks), n),
                mean_inference_count: mean(rows.iter().map(|t| t.inference_count), n),
                mean_atomic_ops: mean(rows.iter().map(|t| t.atomic_ops_count), n),
            }
        })
        .collect()
}

/// Predefined actions plus the guided library built from the bundled dataset.
pub fn default_libraries(embedder: Arc<dyn Embedder>) -> Result<Libraries> {
    let sessions = load_dataset(&bundled_dataset_dir())?;
    let guided = build_guided_library(&sessions, &Keymap::default())?;
    Ok(Libraries::new(seed_library(embedder)?, Arc::new(guided)))
}

/// Like [`default_libraries`] with the local embedder.
pub fn local_libraries() -> Result<Libraries> {
    default_libraries(Arc::new(LocalTrigramEmbedder::default()))
}

pub fn run_benchmark(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let backend = config.backend.build()?;
    let libs = local_libraries()?;
    run_benchmark_with(config, &libs, backend.as_ref())
}

/// Runs every (task, trial) pair against copies of `libs`.
pub fn run_benchmark_with(config: &BenchConfig, libs: &Libraries, backend: &dyn Backend) -> Result<BenchReport> {
    config.validate()?;
    let started = Instant::now();
    let jobs: Vec<(u8, u32)> = config
        .tasks
        .iter()
        .flat_map(|&t| (0..config.trials).map(move |i| (t, i)))
        .collect();
    let trials = par::map_with_threads(config.threads(), &jobs, |&(task_id, trial_index)| {
        let seed = config.seed(trial_index);
        let mut own = libs.clone();
        let t0 = Instant::now();
        let result = run_episode(task_id, seed, &mut own, backend, &config.agent);
        let wall_seconds = t0.elapsed().as_secs_f64();
        match result {
            Ok(r) => TrialResult {
                task_id,
                trial_index,
                seed,
                status: r.status,
                ticks: r.ticks,
                inference_count: r.inference_count,
                atomic_ops_count: r.atomic_ops_count,
                wall_seconds,
            },
            Err(_) => TrialResult {
                task_id,
                trial_index,
                seed,
                status: TaskStatus::Failure(FailureReason::Backend),
                ticks: 0,
                inference_count: 0,
                atomic_ops_count: 0,
                wall_seconds,
            },
        }
    });
    let tasks = summarize(config, &trials);
    let inferences: u64 = trials.iter().map(|t| t.inference_count).sum();
    let ops: u64 = trials.iter().map(|t| t.atomic_ops_count).sum();
    let headline: Vec<&TrialResult> = trials.iter().filter(|t| COMBAT_EASY_MEDIUM.contains(&t.task_id)).collect();
    let combat_easy_medium_success = (!headline.is_empty())
        .then(|| headline.iter().filter(|t| t.succeeded()).count() as f64 / headline.len() as f64);
    Ok(BenchReport {
        version: REPORT_VERSION,
        config: config.echo(),
        tasks,
        trials,
        atomic_ops_per_inference: if inferences == 0 { 0.0 } else { ops as f64 / inferences as f64 },
        combat_easy_medium_success,
        wall_seconds: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    NoSoag,
    NoDtsa,
    NoGuidance,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Full, Variant::NoSoag, Variant::NoDtsa, Variant::NoGuidance];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Full => "full",
            Variant::NoSoag => "no_soag",
            Variant::NoDtsa => "no_dtsa",
            Variant::NoGuidance => "no_guidance",
        }
    }

    /// `base` with this variant's module switched off. `Full` turns all three on.
    pub fn apply(self, base: &AgentConfig) -> AgentConfig {
        let mut c = base.clone();
        c.soag_enabled = self != Variant::NoSoag;
        c.dtsa_enabled = self != Variant::NoDtsa;
        c.human_guidance_enabled = self != Variant::NoGuidance;
        c
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationDelta {
    pub variant: Variant,
    pub task_id: u8,
    /// Variant success rate minus the full configuration's.
    pub success_delta: f64,
    pub extra_failures: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub runs: Vec<(Variant, BenchReport)>,
    pub deltas: Vec<AblationDelta>,
}

impl AblationReport {
    pub fn run(&self, variant: Variant) -> Option<&BenchReport> {
        self.runs.iter().find(|(v, _)| *v == variant).map(|(_, r)| r)
    }

    /// Failures the variant adds over the full run, summed over `tasks`.
    pub fn extra_failures(&self, variant: Variant, tasks: &[u8]) -> i64 {
        self.deltas
            .iter()
            .filter(|d| d.variant == variant && tasks.contains(&d.task_id))
            .map(|d| d.extra_failures)
            .sum()
    }

    pub fn table(&self) -> String {
        let mut out = String::from("task");
        for (v, _) in &self.runs {
            let _ = write!(out, " {:>12}", v.as_str());
        }
        out.push('\n');
        let Some((_, first)) = self.runs.first() else { return out };
        for t in &first.tasks {
            let _ = write!(out, "{:>4}", t.task_id);
            for (_, r) in &self.runs {
                let s = r.task(t.task_id).expect("same tasks in every run");
                let _ = write!(out, " {:>12}", format!("{}/{}", s.successes, s.trials));
            }
            out.push('\n');
        }
        out
    }
}

/// The four configurations on shared seeds.
pub fn run_ablation_suite(base: &BenchConfig) -> Result<AblationReport> {
    base.validate()?;
    let backend = base.backend.build()?;
    let libs = local_libraries()?;
    run_ablation_suite_with(base, &libs, backend.as_ref())
}

pub fn run_ablation_suite_with(base: &BenchConfig, libs: &Libraries, backend: &dyn Backend) -> Result<AblationReport> {
    let mut runs = Vec::new();
    for v in Variant::ALL {
        let config = BenchConfig { agent: v.apply(&base.agent), ..base.clone() };
        runs.push((v, run_benchmark_with(&config, libs, backend)?));
    }
    let full = runs[0].1.clone();
    let mut deltas = Vec::new();
    for (v, r) in runs.iter().skip(1) {
        for t in &r.tasks {
            let f = full.task(t.task_id).expect("same tasks in every run");
            deltas.push(AblationDelta {
                variant: *v,
                task_id: t.task_id,
                success_delta: t.success_rate - f.success_rate,
                extra_failures: i64::from(f.successes) - i64::from(t.successes),
            });
        }
    }
    Ok(AblationReport { runs, deltas })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Structured,
    Table,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = VarpError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "structured" | "json" => Ok(ReportFormat::Structured),
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(VarpError::domain(format!("unknown report format `{other}`"))),
        }
    }
}

pub const CSV_HEADER: &str = "task_id,trial_index,seed,status,reason,ticks,inference_count,atomic_ops_count,wall_seconds";

fn status_parts(s: TaskStatus) -> (&'static str, String) {
    match s {
        TaskStatus::Ongoing => ("ongoing", String::new()),
        TaskStatus::Success => ("success", String::new()),
        TaskStatus::Failure(r) => ("failure", r.to_string()),
    }
}

pub fn render_report(report: &BenchReport, format: ReportFormat) -> Result<String> {
    Ok(match format {
        ReportFormat::Structured => serde_json::to_string_pretty(report).map_err(|e| VarpError::domain(e.to_string()))? + "\n",
        ReportFormat::Csv => {
            let mut out = String::from(CSV_HEADER);
            out.push('\n');
            for t in &report.trials {
                let (status, reason) = status_parts(t.status);
                let _ = writeln!(
                    out,
                    "{},{},{},{},{},{},{},{},{:.3}",
                    t.task_id, t.trial_index, t.seed, status, reason, t.ticks, t.inference_count, t.atomic_ops_count, t.wall_seconds
                );
            }
            out
        }
        ReportFormat::Table => {
            let mut out = format!(
                "{:>4}  {:<10} {:<10} {:>8} {:>10} {:>10} {:>10}\n",
                "task", "name", "difficulty", "success", "ticks", "inference", "atomic_ops"
            );
            for t in &report.tasks {
                let diff = serde_json::to_value(t.difficulty).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default();
                let _ = writeln!(
                    out,
                    "{:>4}  {:<10} {:<10} {:>7.0}% {:>10.1} {:>10.1} {:>10.1}",
                    t.task_id,
                    t.name,
                    diff,
                    t.success_rate * 100.0,
                    t.mean_ticks,
                    t.mean_inference_count,
                    t.mean_atomic_ops
                );
            }
            let _ = writeln!(out, "atomic ops per inference: {:.2}", report.atomic_ops_per_inference);
            if let Some(h) = report.combat_easy_medium_success {
                let _ = writeln!(out, "easy+medium combat success: {:.1}%", h * 100.0);
            }
            out
        }
    })
}

pub fn emit_report(report: &BenchReport, format: ReportFormat, path: &Path) -> Result<()> {
    std::fs::write(path, render_report(report, format)?)?;
    Ok(())
}

pub fn load_report(path: &Path) -> Result<BenchReport> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(|e| VarpError::Load(format!("{}: {e}", path.display())))
}

/// The shipped JSON Schema for structured reports.
pub fn report_schema() -> serde_json::Value {
    serde_json::from_str(include_str!("../assets/schemas/bench_report.schema.json")).expect("shipped schema is valid JSON")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_follow_trial_index() {
        let c = BenchConfig { base_seed: 40, ..BenchConfig::default() };
        assert_eq!(c.seed(0), 40);
        assert_eq!(c.seed(4), 44);
    }

    #[test]
    fn thread_default() {
        let mut c = BenchConfig { tasks: vec![3], trials: 2, ..BenchConfig::default() };
        assert_eq!(c.threads(), 2);
        c.trials = 50;
        assert_eq!(c.threads(), 4);
        c.parallelism = Some(9);
        assert_eq!(c.threads(), 9);
    }

    #[test]
    fn bad_configs() {
        assert!(BenchConfig { trials: 0, ..BenchConfig::default() }.validate().is_err());
        assert!(BenchConfig { tasks: vec![13], ..BenchConfig::default() }.validate().is_err());
        assert!(BenchConfig { tasks: vec![], ..BenchConfig::default() }.validate().is_err());
    }

    #[test]
    fn variants_toggle_one_module() {
        let base = AgentConfig::default();
        let c = Variant::NoDtsa.apply(&base);
        assert!(c.soag_enabled && !c.dtsa_enabled && c.human_guidance_enabled);
        assert_eq!(Variant::Full.apply(&base), base);
    }
}
