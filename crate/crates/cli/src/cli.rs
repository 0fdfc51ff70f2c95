use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use varp_arena::{ArenaConfig, TaskStatus};
use varp_core::agent::{run_episode, AgentConfig};
use varp_core::bench::{
    emit_report, local_libraries, render_report, run_ablation_suite, run_benchmark, BenchConfig, ReportFormat, TrialResult,
};
use varp_core::gateway::{BackendConfig, BackendKind, LocalTrigramEmbedder, RecordingBackend};
use varp_core::guidance::{
    bundled_dataset_dir, compute_stats, generate_dataset, load_dataset, replay_session, Keymap, Session, BUNDLED_PLAN,
};
use varp_core::memory::ActionLibrary;
use varp_core::par::Exec;
use varp_core::VarpError;

use crate::service::{serve, AppState};

// Stdout writes that give up quietly when the reader goes away (`varp ... | head`).
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

macro_rules! outln {
    ($($t:tt)*) => {{
        use std::io::Write as _;
        let _ = writeln!(std::io::stdout(), $($t)*);
    }};
}

/// Exit status for a task or check that ran and did not succeed.
pub const EXIT_FAILURE: u8 = 1;
/// Exit status for bad flags or configuration; nothing was run.
pub const EXIT_CONFIG: u8 = 2;
pub const DEFAULT_PORT: u16 = 8787;

#[derive(Parser, Debug)]
#[command(name = "varp", version, about = "Vision-action agent on a desk-scale arena")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Play one episode and print its result.
    Run(RunArgs),
    /// Run the benchmark (or the ablation suite) and write a report.
    Bench(BenchArgs),
    /// Inspect or regenerate a demonstration dataset.
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Inspect an action library.
    #[command(subcommand)]
    Library(LibraryCommand),
    /// Check that a session file replays to its recorded result.
    Replay { session: PathBuf },
    /// Host the live session service and the UI.
    Serve(ServeArgs),
}

#[derive(Args, Debug, Clone)]
pub struct AgentFlags {
    #[arg(long)]
    pub no_soag: bool,
    #[arg(long)]
    pub no_dtsa: bool,
    #[arg(long)]
    pub no_guidance: bool,
    /// Candidate actions per decision.
    #[arg(long, default_value_t = AgentConfig::default().k)]
    pub k: usize,
    /// Frames shown to self reflection.
    #[arg(long, default_value_t = AgentConfig::default().m)]
    pub m: usize,
    /// Demonstration records after the anchor.
    #[arg(long, default_value_t = AgentConfig::default().n)]
    pub n: usize,
    #[arg(long, default_value_t = AgentConfig::default().step_cap)]
    pub step_cap: u32,
    #[arg(long, default_value_t = AgentConfig::default().reask_budget)]
    pub reask_budget: u32,
    /// Weight of hp lost against damage dealt when scoring counters.
    #[arg(long, default_value_t = AgentConfig::default().optimize.lambda)]
    pub lambda: f64,
    #[arg(long, default_value_t = AgentConfig::default().optimize.neighbor_budget)]
    pub neighbor_budget: usize,
    #[arg(long, default_value_t = AgentConfig::default().optimize.max_len)]
    pub max_counter_len: usize,
    #[arg(long, default_value_t = AgentConfig::default().optimize_steps_per_exchange)]
    pub optimize_steps: usize,
}

impl AgentFlags {
    pub fn config(&self) -> AgentConfig {
        let mut c = AgentConfig {
            soag_enabled: !self.no_soag,
            dtsa_enabled: !self.no_dtsa,
            human_guidance_enabled: !self.no_guidance,
            k: self.k,
            m: self.m,
            n: self.n,
            step_cap: self.step_cap,
            reask_budget: self.reask_budget,
            optimize_steps_per_exchange: self.optimize_steps,
            ..AgentConfig::default()
        };
        c.optimize.lambda = self.lambda;
        c.optimize.neighbor_budget = self.neighbor_budget;
        c.optimize.max_len = self.max_counter_len;
        c
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendArg {
    Scripted,
    Remote,
    Replay,
}

#[derive(Args, Debug, Clone)]
pub struct BackendFlags {
    #[arg(long, value_enum, default_value = "scripted")]
    pub backend: BackendArg,
    #[arg(long, env = "VARP_API_BASE")]
    pub endpoint: Option<String>,
    #[arg(long, env = "VARP_API_KEY", hide_env_values = true)]
    pub api_key: Option<String>,
    #[arg(long, default_value_t = BackendConfig::default().model)]
    pub model: String,
    #[arg(long, default_value_t = BackendConfig::default().timeout_secs)]
    pub timeout_secs: f64,
    #[arg(long, default_value_t = BackendConfig::default().max_attempts)]
    pub max_attempts: u32,
    #[arg(long, default_value_t = BackendConfig::default().backoff_base_secs)]
    pub backoff_secs: f64,
    /// Scripted oracle error rate per single-question query.
    #[arg(long, default_value_t = BackendConfig::default().epsilon_decomposed)]
    pub epsilon_decomposed: f64,
    /// Scripted oracle error rate per question of a bundled query.
    #[arg(long, default_value_t = BackendConfig::default().epsilon_monolithic)]
    pub epsilon_monolithic: f64,
    /// Transcript for the replay backend.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
}

impl BackendFlags {
    pub fn config(&self) -> BackendConfig {
        BackendConfig {
            kind: match self.backend {
                BackendArg::Scripted => BackendKind::ScriptedOracle,
                BackendArg::Remote => BackendKind::Remote,
                BackendArg::Replay => BackendKind::Replay,
            },
            endpoint: self.endpoint.clone(),
            api_key: self.api_key.clone(),
            model: self.model.clone(),
            timeout_secs: self.timeout_secs,
            max_attempts: self.max_attempts,
            backoff_base_secs: self.backoff_secs,
            epsilon_decomposed: self.epsilon_decomposed,
            epsilon_monolithic: self.epsilon_monolithic,
            transcript: self.transcript.clone(),
        }
    }
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub task: u8,
    #[arg(long, default_value_t = 1000)]
    pub seed: u64,
    #[command(flatten)]
    pub agent: AgentFlags,
    #[command(flatten)]
    pub backend: BackendFlags,
    /// Write every model exchange here, for later use with `--backend replay`.
    #[arg(long)]
    pub record_transcript: Option<PathBuf>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormatArg {
    Structured,
    Table,
    Csv,
}

impl From<FormatArg> for ReportFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Structured => ReportFormat::Structured,
            FormatArg::Table => ReportFormat::Table,
            FormatArg::Csv => ReportFormat::Csv,
        }
    }
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    /// Comma separated task ids; all tasks when omitted.
    #[arg(long, value_delimiter = ',')]
    pub tasks: Vec<u8>,
    #[arg(long, default_value_t = 5)]
    pub trials: u32,
    #[arg(long, default_value_t = 1000)]
    pub base_seed: u64,
    /// Worker threads; defaults to min(4, tasks × trials).
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value = "table")]
    pub format: FormatArg,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run all four module configurations on shared seeds.
    #[arg(long)]
    pub ablation: bool,
    #[command(flatten)]
    pub agent: AgentFlags,
    #[command(flatten)]
    pub backend: BackendFlags,
}

#[derive(Subcommand, Debug)]
pub enum DatasetCommand {
    /// Session counts per task and the clean share.
    Stats {
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Replay every session in a directory.
    Check {
        #[arg(long)]
        dir: Option<PathBuf>,
    },
    /// Write the scripted demonstration set.
    Generate {
        #[arg(long)]
        dir: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum LibraryCommand {
    /// List actions, or the top matches for a query.
    Show {
        /// A persisted library; the predefined actions when omitted.
        #[arg(long)]
        file: Option<PathBuf>,
        #[arg(long)]
        query: Option<String>,
        #[arg(long, default_value_t = 5)]
        k: usize,
    },
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, env = "VARP_PORT", default_value_t = DEFAULT_PORT)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Where `save` writes session files.
    #[arg(long, default_value = "sessions")]
    pub sessions_dir: PathBuf,
    /// Milliseconds between agent steps in agent mode.
    #[arg(long, default_value_t = 150)]
    pub step_interval_ms: u64,
    /// A built UI bundle to serve at `/`.
    #[arg(long)]
    pub ui_dir: Option<PathBuf>,
    #[command(flatten)]
    pub agent: AgentFlags,
    #[command(flatten)]
    pub backend: BackendFlags,
}

/// An error with the exit status it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Self { code: EXIT_CONFIG, message: message.to_string() }
    }

    fn runtime(message: impl ToString) -> Self {
        Self { code: EXIT_FAILURE, message: message.to_string() }
    }
}

impl From<VarpError> for Failure {
    fn from(e: VarpError) -> Self {
        match e {
            VarpError::Domain(_) | VarpError::Gateway(varp_core::gateway::GatewayError::Config(_)) => Failure::config(e),
            _ => Failure::runtime(e),
        }
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

pub fn execute(command: Command) -> Result<u8, Failure> {
    match command {
        Command::Run(a) => run(a),
        Command::Bench(a) => bench(a),
        Command::Dataset(c) => dataset(c),
        Command::Library(LibraryCommand::Show { file, query, k }) => library_show(file.as_deref(), query.as_deref(), k),
        Command::Replay { session } => replay(&session),
        Command::Serve(a) => serve_cmd(a),
    }
}

fn check_task(task: u8) -> Result<(), Failure> {
    if ArenaConfig::bundled().task(task).is_none() {
        return Err(Failure::config(format!("unknown task {task}")));
    }
    Ok(())
}

fn run(a: RunArgs) -> Result<u8, Failure> {
    check_task(a.task)?;
    let agent = a.agent.config();
    agent.validate()?;
    let backend = a.backend.config().build().map_err(Failure::config)?;
    let mut libs = local_libraries()?;
    let started = Instant::now();
    let recording = a.record_transcript.as_ref().map(|_| RecordingBackend::new(SharedBackend(backend.as_ref())));
    let result = match &recording {
        Some(rec) => run_episode(a.task, a.seed, &mut libs, rec, &agent)?,
        None => run_episode(a.task, a.seed, &mut libs, backend.as_ref(), &agent)?,
    };
    if let (Some(rec), Some(path)) = (&recording, &a.record_transcript) {
        rec.export(path).map_err(Failure::runtime)?;
    }
    let trial = TrialResult {
        task_id: a.task,
        trial_index: 0,
        seed: a.seed,
        status: result.status,
        ticks: result.ticks,
        inference_count: result.inference_count,
        atomic_ops_count: result.atomic_ops_count,
        wall_seconds: started.elapsed().as_secs_f64(),
    };
    outln!("{}", serde_json::to_string_pretty(&trial).expect("trial serializes"));
    Ok(if result.status == TaskStatus::Success { 0 } else { EXIT_FAILURE })
}

/// Lets a borrowed backend sit inside a [`RecordingBackend`].
struct SharedBackend<'a>(&'a dyn varp_core::gateway::Backend);

impl varp_core::gateway::Backend for SharedBackend<'_> {
    fn complete(
        &self,
        bundle: &varp_core::gateway::PromptBundle,
    ) -> Result<varp_core::gateway::ModelReply, varp_core::gateway::GatewayError> {
        self.0.complete(bundle)
    }

    fn name(&self) -> &str {
        self.0.name()
    }
}

fn bench(a: BenchArgs) -> Result<u8, Failure> {
    let config = BenchConfig {
        tasks: if a.tasks.is_empty() { BenchConfig::default().tasks } else { a.tasks.clone() },
        trials: a.trials,
        base_seed: a.base_seed,
        agent: a.agent.config(),
        backend: a.backend.config(),
        parallelism: a.threads,
    };
    config.validate()?;
    if a.ablation {
        let report = run_ablation_suite(&config)?;
        let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
        match &a.out {
            Some(path) => std::fs::write(path, text).map_err(Failure::runtime)?,
            None => out!("{text}"),
        }
        out!("{}", report.table());
        return Ok(0);
    }
    let report = run_benchmark(&config)?;
    match &a.out {
        Some(path) => {
            emit_report(&report, a.format.into(), path)?;
            if a.format != FormatArg::Table {
                out!("{}", render_report(&report, ReportFormat::Table)?);
            }
        }
        None => out!("{}", render_report(&report, a.format.into())?),
    }
    Ok(0)
}

fn dataset(c: DatasetCommand) -> Result<u8, Failure> {
    match c {
        DatasetCommand::Stats { dir, json } => {
            let stats = compute_stats(&dir.unwrap_or_else(bundled_dataset_dir))?;
            if json {
                outln!("{}", serde_json::to_string_pretty(&stats).expect("stats serialize"));
            } else {
                out!("{}", stats.table());
            }
            Ok(0)
        }
        DatasetCommand::Check { dir } => {
            let dir = dir.unwrap_or_else(bundled_dataset_dir);
            let keymap = Keymap::default();
            let mut bad = 0;
            for s in load_dataset(&dir)? {
                match replay_session(&s, &keymap) {
                    Ok(r) => outln!("{}  ok  {}", s.header.session_id, r.status),
                    Err(e) => {
                        bad += 1;
                        outln!("{}  FAILED  {e}", s.header.session_id);
                    }
                }
            }
            Ok(if bad == 0 { 0 } else { EXIT_FAILURE })
        }
        DatasetCommand::Generate { dir } => {
            for p in generate_dataset(&dir, BUNDLED_PLAN)? {
                outln!("{}", p.display());
            }
            Ok(0)
        }
    }
}

fn library_show(file: Option<&Path>, query: Option<&str>, k: usize) -> Result<u8, Failure> {
    let lib = match file {
        Some(p) => ActionLibrary::load(p, Arc::new(LocalTrigramEmbedder::default()))?,
        None => local_libraries()?.actions,
    };
    match query {
        Some(q) => {
            let v = lib.embed(q)?;
            for (e, s) in lib.curate_skills(&v, k, Exec::default()) {
                outln!("{s:>7.4}  {:<40} {:<12} {:<16} {}", e.name, e.provenance, e.body.letters(), e.annotation);
            }
        }
        None => {
            for e in lib.entries() {
                outln!("{:<40} {:<12} {:<16} {}", e.name, e.provenance, e.body.letters(), e.annotation);
            }
        }
    }
    Ok(0)
}

fn replay(path: &Path) -> Result<u8, Failure> {
    let session = Session::load(path).map_err(|e| match e {
        VarpError::Io(_) => Failure::config(format!("{}: {e}", path.display())),
        other => Failure::runtime(other),
    })?;
    match replay_session(&session, &Keymap::default()) {
        Ok(r) => {
            outln!("{}: replayed to {} at tick {}", session.header.session_id, r.status, r.ticks);
            Ok(0)
        }
        Err(VarpError::Integrity { tick, message }) => {
            outln!("{}: diverged at tick {tick}: {message}", session.header.session_id);
            Ok(EXIT_FAILURE)
        }
        Err(e) => Err(Failure::runtime(e)),
    }
}

fn serve_cmd(a: ServeArgs) -> Result<u8, Failure> {
    let agent = a.agent.config();
    agent.validate()?;
    let backend = a.backend.config().build().map_err(Failure::config)?;
    let state = Arc::new(
        AppState::new(Arc::from(backend), local_libraries()?, agent, a.sessions_dir.clone())
            .with_step_interval(std::time::Duration::from_millis(a.step_interval_ms)),
    );
    let runtime = tokio::runtime::Runtime::new().map_err(Failure::runtime)?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port)).await.map_err(Failure::config)?;
        let addr = listener.local_addr().map_err(Failure::runtime)?;
        outln!("listening on http://{addr} (sessions in {})", a.sessions_dir.display());
        serve(listener, state, a.ui_dir).await.map_err(Failure::runtime)
    })?;
    Ok(0)
}
