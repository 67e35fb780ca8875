//! Benchmark harness: config loading, the method × task × seed matrix runner,
//! the task-message sweep, replay logs, and golden fixture authoring.
//!
//! Cells are independent and run on a worker pool; results are sorted before
//! aggregation, so two runs of the same config against the scripted backend
//! produce byte-identical reports.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{click_action, enter_text_action, scroll_action};
use crate::agent::{
    acg_collect, run_acg, run_episode, AgentError, IterationTrace, MethodKind,
    MethodVariant, RunConfig, ACG_TRIALS,
};
use crate::dom::FilterConfig;
use crate::env::{self, solver, EnvError};
use crate::llm::{
    CompletionBackend, FixtureRecord, LlmError, RemoteBackend, RetryPolicy, ScriptedBackend,
};
use crate::program::ApiFunction;
use crate::prompt::{manual_example, BackendKind, LlmConfig};
use crate::report::{aggregate, BenchMethod, CategoryReport, CellOutcome, Report, ReportFormat};

pub const REPLAY_FILE_NAME: &str = "replay.jsonl";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmSection {
    #[serde(flatten)]
    pub llm: LlmConfig,
    /// Remote backend only: OpenAI-compatible server root.
    pub base_url: String,
    /// Scripted backend only: path to the fixture file.
    pub fixture: Option<PathBuf>,
}

impl Default for LlmSection {
    fn default() -> Self {
        Self {
            llm: LlmConfig::default(),
            base_url: "https://api.openai.com".to_string(),
            fixture: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterSection {
    pub preserve_order: bool,
    /// Whitelist overrides; the published defaults apply when absent.
    pub useful_tags: Option<Vec<String>>,
    pub useful_classes: Option<Vec<String>>,
}

impl Default for FilterSection {
    fn default() -> Self {
        Self { preserve_order: true, useful_tags: None, useful_classes: None }
    }
}

impl FilterSection {
    pub fn to_filter_config(&self) -> FilterConfig {
        let mut cfg = FilterConfig { preserve_order: self.preserve_order, ..FilterConfig::default() };
        if let Some(tags) = &self.useful_tags {
            cfg.useful_tags = tags.iter().map(|t| t.to_ascii_lowercase()).collect();
        }
        if let Some(classes) = &self.useful_classes {
            cfg.useful_classes = classes.iter().map(|c| c.to_ascii_lowercase()).collect();
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodsSection {
    pub methods: Vec<BenchMethod>,
    /// In-context example counts to evaluate; each k is its own cell.
    pub k: Vec<u8>,
    pub max_iter: usize,
}

impl Default for MethodsSection {
    fn default() -> Self {
        Self { methods: vec![BenchMethod::WebWise], k: vec![0, 1], max_iter: 10 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TasksSection {
    /// Task ids to run; empty means the full catalog.
    pub tasks: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodesSection {
    pub count: u32,
    pub seed_base: u64,
}

impl Default for EpisodesSection {
    fn default() -> Self {
        Self { count: 50, seed_base: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputSection {
    /// Directory for the replay log.
    pub dir: PathBuf,
    pub format: ReportFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("out"), format: ReportFormat::Table }
    }
}

/// The full harness configuration, usually loaded from a TOML file with
/// sections `llm`, `filter`, `methods`, `tasks`, `episodes`, and `output`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub llm: LlmSection,
    pub filter: FilterSection,
    pub methods: MethodsSection,
    pub tasks: TasksSection,
    pub episodes: EpisodesSection,
    pub output: OutputSection,
}

impl HarnessConfig {
    pub fn from_path(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("read {}: {e}", path.display())))?;
        let cfg: HarnessConfig = toml::from_str(&text)
            .map_err(|e| HarnessError::Config(format!("parse {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        self.llm.llm.validate().map_err(HarnessError::Config)?;
        if self.methods.methods.is_empty() {
            return Err(HarnessError::Config("methods must be nonempty".to_string()));
        }
        if self.methods.k.is_empty() || self.methods.k.iter().any(|k| *k > 1) {
            return Err(HarnessError::Config("k must be a nonempty subset of {0, 1}".to_string()));
        }
        if self.methods.max_iter == 0 {
            return Err(HarnessError::Config("max_iter must be positive".to_string()));
        }
        if self.episodes.count == 0 {
            return Err(HarnessError::Config("episodes.count must be positive".to_string()));
        }
        for task in &self.tasks.tasks {
            env::task_metadata(task)
                .map_err(|_| HarnessError::Config(format!("unknown task '{task}'")))?;
        }
        Ok(())
    }

    /// The configured task list, or the full catalog when empty.
    pub fn resolved_tasks(&self) -> Vec<String> {
        if self.tasks.tasks.is_empty() {
            env::list_tasks().into_iter().map(|t| t.task_id).collect()
        } else {
            self.tasks.tasks.clone()
        }
    }
}

/// Builds the backend the config names. Scripted backends require a fixture
/// path; remote backends read the API key from the environment.
pub fn build_backend(cfg: &HarnessConfig) -> Result<Box<dyn CompletionBackend>, HarnessError> {
    match cfg.llm.llm.backend {
        BackendKind::Scripted => {
            let path = cfg.llm.fixture.as_ref().ok_or_else(|| {
                HarnessError::Config(
                    "scripted backend requires llm.fixture (author one with gen-fixtures)"
                        .to_string(),
                )
            })?;
            Ok(Box::new(ScriptedBackend::from_file(path)?))
        }
        BackendKind::Remote => Ok(Box::new(RemoteBackend::new(
            &cfg.llm.base_url,
            &cfg.llm.llm,
            RetryPolicy::default(),
        ))),
    }
}

/// One line of the replay log: a full scored episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeLogRecord {
    pub task_id: String,
    pub method: BenchMethod,
    pub k: u8,
    pub seed: u64,
    pub score: i8,
    pub tle: bool,
    pub steps_taken: u32,
    pub trace: Vec<IterationTrace>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct CellSpec {
    method: BenchMethod,
    k: u8,
}

fn cell_specs(cfg: &HarnessConfig) -> Vec<CellSpec> {
    let mut ks: Vec<u8> = cfg.methods.k.clone();
    ks.sort_unstable();
    ks.dedup();
    let mut specs = Vec::new();
    for method in &cfg.methods.methods {
        if *method == BenchMethod::Acg {
            // ACG is defined with auto examples only; it contributes one cell.
            specs.push(CellSpec { method: *method, k: 0 });
        } else {
            for k in &ks {
                specs.push(CellSpec { method: *method, k: *k });
            }
        }
    }
    specs
}

fn method_kind(method: BenchMethod, k: u8) -> MethodKind {
    let variant = match method {
        BenchMethod::InstructionOnly => MethodVariant::InstructionOnly,
        BenchMethod::FilteredDom | BenchMethod::Acg => MethodVariant::SingleStepFiltered,
        BenchMethod::WholeDom => MethodVariant::SingleStepWhole,
        BenchMethod::WebWise => MethodVariant::WebWise,
    };
    MethodKind::new(variant, k)
}

fn run_cell(
    task_id: &str,
    spec: CellSpec,
    cfg: &HarnessConfig,
    backend: &dyn CompletionBackend,
) -> Result<CellOutcome, HarnessError> {
    let run_cfg = RunConfig {
        method: method_kind(spec.method, spec.k),
        max_iter: cfg.methods.max_iter,
        llm: cfg.llm.llm.clone(),
        filter: cfg.filter.to_filter_config(),
    };
    let results = if spec.method == BenchMethod::Acg {
        let store = acg_collect(task_id, ACG_TRIALS, &run_cfg, backend)?;
        run_acg(
            task_id,
            &store,
            cfg.episodes.count as usize,
            cfg.episodes.seed_base,
            &run_cfg,
            backend,
        )?
    } else {
        let examples = if spec.k == 1 {
            vec![manual_example(task_id).ok_or_else(|| {
                HarnessError::Config(format!("no bundled manual example for task '{task_id}'"))
            })?]
        } else {
            Vec::new()
        };
        let mut results = Vec::with_capacity(cfg.episodes.count as usize);
        for episode in 0..cfg.episodes.count {
            let seed = cfg.episodes.seed_base + u64::from(episode);
            results.push(run_episode(task_id, seed, &run_cfg, &examples, backend)?);
        }
        results
    };
    Ok(CellOutcome { task_id: task_id.to_string(), method: spec.method, k: spec.k, results })
}

/// Runs the full matrix for a config against the given backend. Cells run in
/// parallel; the outcome list is sorted, so the caller sees a deterministic
/// order.
pub fn run_matrix(
    cfg: &HarnessConfig,
    backend: &dyn CompletionBackend,
) -> Result<Vec<CellOutcome>, HarnessError> {
    cfg.validate()?;
    let tasks = cfg.resolved_tasks();
    let specs = cell_specs(cfg);
    let jobs: Vec<(String, CellSpec)> = tasks
        .iter()
        .flat_map(|task| specs.iter().map(move |spec| (task.clone(), *spec)))
        .collect();
    let mut outcomes = jobs
        .par_iter()
        .map(|(task, spec)| run_cell(task, *spec, cfg, backend))
        .collect::<Result<Vec<_>, _>>()?;
    outcomes.sort_by(|a, b| (a.method, a.k, &a.task_id).cmp(&(b.method, b.k, &b.task_id)));
    Ok(outcomes)
}

/// A completed benchmark run: the aggregated report plus the replay log path.
#[derive(Debug)]
pub struct BenchRun {
    pub report: Report,
    pub replay_path: PathBuf,
}

/// Runs the configured matrix, writes the replay log, and aggregates the
/// report.
pub fn run_benchmark(cfg: &HarnessConfig) -> Result<BenchRun, HarnessError> {
    let backend = build_backend(cfg)?;
    let outcomes = run_matrix(cfg, backend.as_ref())?;

    fs::create_dir_all(&cfg.output.dir)?;
    let replay_path = cfg.output.dir.join(REPLAY_FILE_NAME);
    let mut log = fs::File::create(&replay_path)?;
    for outcome in &outcomes {
        for result in &outcome.results {
            let record = EpisodeLogRecord {
                task_id: result.task_id.clone(),
                method: outcome.method,
                k: outcome.k,
                seed: result.seed,
                score: result.score,
                tle: result.tle,
                steps_taken: result.steps_taken,
                trace: result.trace.clone(),
            };
            let line = serde_json::to_string(&record).expect("record serializes");
            writeln!(log, "{line}")?;
        }
    }

    Ok(BenchRun { report: aggregate(&outcomes), replay_path })
}

/// Per-variant category means from sweeping the multi-step task message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub variants: Vec<SweepVariant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepVariant {
    pub variant: u8,
    pub categories: Vec<CategoryReport>,
}

/// Repeats the multi-step cells once per task-message variant. The config
/// must select the `webwise` method.
pub fn sweep_task_messages(cfg: &HarnessConfig) -> Result<SweepReport, HarnessError> {
    if !cfg.methods.methods.contains(&BenchMethod::WebWise) {
        return Err(HarnessError::Config(
            "sweep-messages requires the webwise method in the config".to_string(),
        ));
    }
    let backend = build_backend(cfg)?;
    let mut variants = Vec::new();
    for variant in 1..=crate::prompt::TASK_MESSAGES.len() as u8 {
        let mut variant_cfg = cfg.clone();
        variant_cfg.llm.llm.task_message_variant = variant;
        variant_cfg.methods.methods = vec![BenchMethod::WebWise];
        let outcomes = run_matrix(&variant_cfg, backend.as_ref())?;
        variants.push(SweepVariant { variant, categories: aggregate(&outcomes).categories });
    }
    Ok(SweepReport { variants })
}

/// Renders a sweep report in the requested format.
pub fn emit_sweep(sweep: &SweepReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(sweep).expect("sweep serializes");
            out.push('\n');
            out
        }
        ReportFormat::Csv => {
            let mut out = String::from("variant,method,k,category,mean_rate\n");
            for variant in &sweep.variants {
                for category in &variant.categories {
                    out.push_str(&format!(
                        "{},{},{},{},{}\n",
                        variant.variant,
                        category.method.name(),
                        category.k,
                        category.category.label(),
                        category.mean_rate
                    ));
                }
            }
            out
        }
        ReportFormat::Table => {
            let mut out = String::from("variant  k  category            mean_rate\n");
            for variant in &sweep.variants {
                for category in &variant.categories {
                    out.push_str(&format!(
                        "{:<9}{:<3}{:<20}{:.2}\n",
                        variant.variant,
                        category.k,
                        category.category.label(),
                        category.mean_rate
                    ));
                }
            }
            out
        }
    }
}

/// Writes a rendered report to a file.
pub fn write_text(path: &Path, text: &str) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    fs::write(path, text)?;
    Ok(())
}

/// Result of re-running a replay log against the environment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReplayReport {
    pub episodes: usize,
    pub divergences: Vec<String>,
}

/// Re-executes every recorded action of a replay log and checks that the
/// deterministic environment reproduces the recorded rewards and termination
/// flags.
pub fn verify_replay(path: &Path) -> Result<ReplayReport, HarnessError> {
    let file = fs::File::open(path)?;
    let mut report = ReplayReport::default();
    for (number, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EpisodeLogRecord = serde_json::from_str(&line)
            .map_err(|e| HarnessError::Config(format!("{}:{}: {e}", path.display(), number + 1)))?;
        report.episodes += 1;
        if let Err(reason) = replay_episode(&record) {
            report.divergences.push(format!(
                "{} seed {} ({} k={}): {reason}",
                record.task_id,
                record.seed,
                record.method.name(),
                record.k
            ));
        }
    }
    Ok(report)
}

fn replay_episode(record: &EpisodeLogRecord) -> Result<(), String> {
    let mut state = env::reset(&record.task_id, record.seed).map_err(|e| e.to_string())?;
    for iteration in &record.trace {
        for action in &iteration.actions {
            let obs = state.observation();
            let resolved = match action.function {
                ApiFunction::Click => click_action(&action.args[0], &action.args[1], &obs),
                ApiFunction::EnterText => {
                    enter_text_action(&action.args[0], &obs, state.focused_element())
                }
                ApiFunction::Scroll => scroll_action(&action.args[0], &obs),
            }
            .map_err(|e| format!("action no longer resolves: {e}"))?;
            let outcome = state.step(&resolved).map_err(|e| e.to_string())?;
            if outcome.reward != action.reward
                || outcome.terminated != action.terminated
                || outcome.truncated != action.truncated
            {
                return Err(format!(
                    "outcome mismatch at iteration {}: recorded ({}, {}, {}), replayed ({}, {}, {})",
                    iteration.iteration,
                    action.reward,
                    action.terminated,
                    action.truncated,
                    outcome.reward,
                    outcome.terminated,
                    outcome.truncated
                ));
            }
        }
    }
    Ok(())
}

/// How golden fixture programs are laid out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureMode {
    /// One full program per episode under step index 0. Works for every
    /// method: the multi-step loop completes it in its first iteration.
    SingleStep,
    /// One program per solver phase, keyed by iteration index; exercises the
    /// multi-step loop across several completions.
    WebWise,
}

impl std::str::FromStr for FixtureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "single-step" => Ok(FixtureMode::SingleStep),
            "webwise" => Ok(FixtureMode::WebWise),
            other => Err(format!("unknown fixture mode '{other}' (expected single-step or webwise)")),
        }
    }
}

/// Authors solver-derived fixture records for the given tasks and seed range.
/// Single-step mode also covers the auto-context trial seeds, so ACG cells
/// replay against the same file.
pub fn golden_fixture_records(
    task_ids: &[String],
    seed_base: u64,
    episodes: u32,
    mode: FixtureMode,
) -> Result<Vec<FixtureRecord>, EnvError> {
    let mut records = Vec::new();
    for task_id in task_ids {
        for episode in 0..episodes {
            let seed = seed_base + u64::from(episode);
            push_records(&mut records, task_id, seed, mode)?;
        }
        if mode == FixtureMode::SingleStep {
            for trial in 0..ACG_TRIALS {
                let seed = crate::agent::ACG_TRIAL_SEED_BASE + trial as u64;
                push_records(&mut records, task_id, seed, mode)?;
            }
        }
    }
    Ok(records)
}

fn push_records(
    records: &mut Vec<FixtureRecord>,
    task_id: &str,
    seed: u64,
    mode: FixtureMode,
) -> Result<(), EnvError> {
    let plan = solver::solve_task(task_id, seed)?;
    match mode {
        FixtureMode::SingleStep => records.push(FixtureRecord {
            task_id: task_id.to_string(),
            seed: Some(seed),
            step_index: 0,
            response_text: plan.single_program(),
        }),
        FixtureMode::WebWise => {
            for (step_index, program) in plan.phase_programs().into_iter().enumerate() {
                records.push(FixtureRecord {
                    task_id: task_id.to_string(),
                    seed: Some(seed),
                    step_index,
                    response_text: program,
                });
            }
        }
    }
    Ok(())
}
