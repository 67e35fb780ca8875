//! The agent methods: instruction-only, single-step over filtered or whole
//! DOM, the multi-step loop, and auto-context generation from scored trials.
//!
//! Single-step methods request one completion per episode and execute the
//! whole extracted program. The multi-step loop re-filters the page before
//! every iteration, carries the post-execution observation forward, and stops
//! on success, failure, or after `max_iter` completions. Unusable programs
//! consume an iteration and the loop continues.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dom::{filter_dom, serialize_observation, serialize_whole_dom, FilterConfig};
use crate::env::{self, EnvError, EpisodeState};
use crate::llm::{complete, CallKey, CompletionBackend, LlmError};
use crate::program::{execute_program, extract_program, pretty_print, ApiFunction, ProgramError};
use crate::prompt::{assemble_prompt, ContextExample, ExampleOrigin, LlmConfig};

/// Seed base for auto-context trials, disjoint from evaluation seeds.
pub const ACG_TRIAL_SEED_BASE: u64 = 1_000_000;

/// Default number of zero-shot trials for auto-context generation.
pub const ACG_TRIALS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodVariant {
    InstructionOnly,
    SingleStepFiltered,
    SingleStepWhole,
    WebWise,
}

/// A method plus its in-context example count (0 or 1 manual examples).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MethodKind {
    pub variant: MethodVariant,
    pub k: u8,
}

impl MethodKind {
    pub fn new(variant: MethodVariant, k: u8) -> Self {
        debug_assert!(k <= 1, "the protocol uses k in {{0, 1}}");
        Self { variant, k }
    }
}

/// Everything one episode run needs besides the backend.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: MethodKind,
    /// Completion budget for the multi-step loop.
    pub max_iter: usize,
    pub llm: LlmConfig,
    pub filter: FilterConfig,
}

impl RunConfig {
    pub fn new(method: MethodKind) -> Self {
        Self { method, max_iter: 10, llm: LlmConfig::default(), filter: FilterConfig::default() }
    }
}

/// One action execution within an iteration, kept for replay.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRecord {
    pub function: ApiFunction,
    pub args: Vec<String>,
    pub reward: i8,
    pub terminated: bool,
    pub truncated: bool,
}

/// One completion round: the raw response and what executing it did.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Observation text as rendered into the prompt for this iteration.
    pub observation_text: String,
    pub response_text: String,
    pub usable: bool,
    pub aborted_reason: Option<String>,
    pub actions: Vec<ActionRecord>,
}

/// Outcome of one scored episode.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub task_id: String,
    pub seed: u64,
    /// +1 on success, -1 on any failure (including TLE and truncation).
    pub score: i8,
    pub steps_taken: u32,
    pub tle: bool,
    pub trace: Vec<IterationTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AgentError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Auto-generated in-context examples for one task, capped at two.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcgStore {
    task_id: String,
    examples: Vec<ContextExample>,
}

impl AcgStore {
    pub const CAPACITY: usize = 2;

    pub fn new(task_id: &str) -> Self {
        Self { task_id: task_id.to_string(), examples: Vec::new() }
    }

    pub fn task_id(&self) -> &str {
        &self.task_id
    }

    pub fn examples(&self) -> &[ContextExample] {
        &self.examples
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    fn push(&mut self, example: ContextExample) {
        if self.examples.len() < Self::CAPACITY {
            self.examples.push(example);
        }
    }
}

fn observation_text(state: &EpisodeState, method: MethodVariant, filter: &FilterConfig) -> String {
    match method {
        MethodVariant::InstructionOnly => String::new(),
        MethodVariant::SingleStepFiltered | MethodVariant::WebWise => {
            serialize_observation(&filter_dom(&state.observation(), filter), true)
        }
        MethodVariant::SingleStepWhole => serialize_whole_dom(&state.observation()),
    }
}

fn score_of(state: &EpisodeState) -> i8 {
    if state.terminated() {
        state.reward()
    } else {
        -1
    }
}

/// Runs one episode of a single-step method: one completion, one program,
/// scored by the terminal reward. Unusable programs and prompts over the
/// token budget score -1.
pub fn run_single_step(
    task_id: &str,
    seed: u64,
    cfg: &RunConfig,
    examples: &[ContextExample],
    backend: &dyn CompletionBackend,
) -> Result<EpisodeResult, AgentError> {
    debug_assert_ne!(cfg.method.variant, MethodVariant::WebWise);
    let mut state = env::reset(task_id, seed)?;
    let obs_text = observation_text(&state, cfg.method.variant, &cfg.filter);
    let bundle = assemble_prompt(&cfg.method, examples, state.instruction(), &obs_text, &cfg.llm);
    let key = CallKey::new(task_id, seed, 0);
    let response = match complete(backend, &bundle, &key, &cfg.llm) {
        Ok(text) => text,
        Err(LlmError::TokenLimitExceeded { .. }) => {
            return Ok(EpisodeResult {
                task_id: task_id.to_string(),
                seed,
                score: -1,
                steps_taken: 0,
                tle: true,
                trace: Vec::new(),
            });
        }
        Err(other) => return Err(other.into()),
    };
    let program = extract_program(&response);
    let mut trace = IterationTrace {
        iteration: 0,
        observation_text: obs_text,
        response_text: response.raw,
        usable: program.usable,
        aborted_reason: None,
        actions: Vec::new(),
    };
    if program.usable {
        let result = match execute_program(&program, &mut state) {
            Ok(result) => result,
            Err(ProgramError::Env(e)) => return Err(e.into()),
            Err(ProgramError::ProgramUnusable) => unreachable!("usability checked above"),
        };
        trace.aborted_reason = result.aborted_reason;
        trace.actions = result
            .trace
            .iter()
            .map(|(call, outcome)| ActionRecord {
                function: call.function,
                args: call.args.clone(),
                reward: outcome.reward,
                terminated: outcome.terminated,
                truncated: outcome.truncated,
            })
            .collect();
    }
    Ok(EpisodeResult {
        task_id: task_id.to_string(),
        seed,
        score: score_of(&state),
        steps_taken: state.step_count(),
        tle: false,
        trace: vec![trace],
    })
}

/// Runs one episode of the multi-step method: generate, execute, observe,
/// repeat, stopping on success, environment failure, or `max_iter`
/// completions.
pub fn run_webwise(
    task_id: &str,
    seed: u64,
    cfg: &RunConfig,
    examples: &[ContextExample],
    backend: &dyn CompletionBackend,
) -> Result<EpisodeResult, AgentError> {
    debug_assert_eq!(cfg.method.variant, MethodVariant::WebWise);
    let mut state = env::reset(task_id, seed)?;
    let mut traces = Vec::new();
    let mut tle = false;

    for iteration in 0..cfg.max_iter {
        let obs_text = observation_text(&state, MethodVariant::WebWise, &cfg.filter);
        let bundle =
            assemble_prompt(&cfg.method, examples, state.instruction(), &obs_text, &cfg.llm);
        let key = CallKey::new(task_id, seed, iteration);
        let response = match complete(backend, &bundle, &key, &cfg.llm) {
            Ok(text) => text,
            Err(LlmError::TokenLimitExceeded { .. }) => {
                tle = true;
                break;
            }
            Err(other) => return Err(other.into()),
        };
        let program = extract_program(&response);
        let mut trace = IterationTrace {
            iteration,
            observation_text: obs_text,
            response_text: response.raw,
            usable: program.usable,
            aborted_reason: None,
            actions: Vec::new(),
        };
        if program.usable {
            let result = match execute_program(&program, &mut state) {
                Ok(result) => result,
                Err(ProgramError::Env(e)) => return Err(e.into()),
                Err(ProgramError::ProgramUnusable) => unreachable!("usability checked above"),
            };
            trace.aborted_reason = result.aborted_reason;
            trace.actions = result
                .trace
                .iter()
                .map(|(call, outcome)| ActionRecord {
                    function: call.function,
                    args: call.args.clone(),
                    reward: outcome.reward,
                    terminated: outcome.terminated,
                    truncated: outcome.truncated,
                })
                .collect();
        }
        traces.push(trace);
        if state.finished() {
            break;
        }
    }

    Ok(EpisodeResult {
        task_id: task_id.to_string(),
        seed,
        score: if tle { -1 } else { score_of(&state) },
        steps_taken: state.step_count(),
        tle,
        trace: traces,
    })
}

/// Dispatches on the configured method.
pub fn run_episode(
    task_id: &str,
    seed: u64,
    cfg: &RunConfig,
    examples: &[ContextExample],
    backend: &dyn CompletionBackend,
) -> Result<EpisodeResult, AgentError> {
    match cfg.method.variant {
        MethodVariant::WebWise => run_webwise(task_id, seed, cfg, examples, backend),
        _ => run_single_step(task_id, seed, cfg, examples, backend),
    }
}

/// Runs `n_trials` zero-shot single-step episodes over distinct seeds and
/// preserves the first two successful (observation, task, program) triples as
/// in-context examples. Trials always run to the fixed count, even once the
/// store is full.
pub fn acg_collect(
    task_id: &str,
    n_trials: usize,
    cfg: &RunConfig,
    backend: &dyn CompletionBackend,
) -> Result<AcgStore, AgentError> {
    let zero_shot = RunConfig {
        method: MethodKind::new(MethodVariant::SingleStepFiltered, 0),
        ..cfg.clone()
    };
    let mut store = AcgStore::new(task_id);
    for trial in 0..n_trials {
        let seed = ACG_TRIAL_SEED_BASE + trial as u64;
        let result = run_single_step(task_id, seed, &zero_shot, &[], backend)?;
        if result.score == 1 && store.len() < AcgStore::CAPACITY {
            let round = result.trace.first().expect("single-step episodes have one round");
            let program = extract_program(&round.response_text.clone().into());
            store.push(ContextExample {
                task_description: env::reset(task_id, seed)?.instruction().to_string(),
                serialized_observation: round.observation_text.clone(),
                program_text: pretty_print(&program),
                origin: ExampleOrigin::Auto,
            });
        }
    }
    Ok(store)
}

/// Evaluates the filtered single-step method over `iterations` seeded
/// episodes with the store's examples injected into every prompt.
pub fn run_acg(
    task_id: &str,
    store: &AcgStore,
    iterations: usize,
    seed_base: u64,
    cfg: &RunConfig,
    backend: &dyn CompletionBackend,
) -> Result<Vec<EpisodeResult>, AgentError> {
    debug_assert_eq!(store.task_id(), task_id);
    let eval = RunConfig {
        method: MethodKind::new(MethodVariant::SingleStepFiltered, 0),
        ..cfg.clone()
    };
    let mut results = Vec::with_capacity(iterations);
    for episode in 0..iterations {
        let seed = seed_base + episode as u64;
        results.push(run_single_step(task_id, seed, &eval, store.examples(), backend)?);
    }
    Ok(results)
}
