//! Building blocks for an LLM-driven web-task agent.
//!
//! The crate is organized around a small pipeline: [`dom`] models page state
//! and whitelist filtering, [`env`] is a seeded deterministic simulator of
//! MiniWob++-style tasks, [`actions`] resolves the three primitive action
//! constructors against an observation, [`program`] extracts and interprets
//! action programs from raw model output, [`prompt`] assembles chat prompts
//! and [`llm`] completes them through a remote or scripted backend, [`agent`]
//! runs the single-step and multi-step methods plus auto-context generation,
//! and [`harness`]/[`report`] drive benchmark matrices and aggregate results.

pub mod actions;
pub mod agent;
pub mod dom;
pub mod env;
pub mod harness;
pub mod llm;
pub mod program;
pub mod prompt;
pub mod report;

pub use actions::{click_action, enter_text_action, scroll_action, Action, ActionError};
pub use agent::{
    acg_collect, run_acg, run_episode, run_single_step, run_webwise, AcgStore, AgentError,
    EpisodeResult, MethodKind, MethodVariant, RunConfig,
};
pub use dom::{
    filter_dom, serialize_observation, serialize_whole_dom, DomElement, ElementId, FilterConfig,
    FilteredObservation, Observation,
};
pub use env::{list_tasks, reset, EnvError, EpisodeState, FunctionCount, StepOutcome, TaskMetadata};
pub use harness::{
    golden_fixture_records, run_benchmark, sweep_task_messages, verify_replay, BenchRun,
    FixtureMode, HarnessConfig, HarnessError,
};
pub use llm::{complete, CallKey, CompletionBackend, FixtureRecord, LlmError, ScriptedBackend};
pub use program::{
    execute_program, extract_program, ExecutionResult, GeneratedText, Program, Statement,
};
pub use prompt::{assemble_prompt, estimate_tokens, ContextExample, LlmConfig, Message, PromptBundle};
pub use report::{BenchMethod, CategoryReport, Report, ReportFormat, ReportRow};
