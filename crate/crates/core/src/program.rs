//! Extraction of executable action programs from raw model output, and their
//! interpretation against a running episode.
//!
//! Recognized surface grammar, one statement per line:
//!
//! ```text
//! action_line := "action" "=" fn "(" arg { "," arg } ")"
//! fn          := "click_action1" | "enter_text_action" | "scroll_action1"
//! arg         := [ identifier "=" ] quoted_string | "observation"
//! step_line   := "observation, reward, terminated, truncated, info = env.step(action)"
//! ```
//!
//! Everything else (prose, code fences, comments, `getSummary` calls) is kept
//! as an [`Statement::Unsupported`] record and skipped during execution.
//! Control-flow lines (`if`/`for`/`while`) and their indented bodies are not
//! interpreted; they are surfaced as unsupported so traces show what was
//! dropped.

use std::collections::BTreeMap;
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::{click_action, enter_text_action, scroll_action};
use crate::env::{EnvError, EpisodeState, StepOutcome};

/// The three functions of the action API, named by role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ApiFunction {
    Click,
    EnterText,
    Scroll,
}

impl ApiFunction {
    /// The exact identifier recognized in generated programs.
    pub const fn grammar_name(self) -> &'static str {
        match self {
            ApiFunction::Click => "click_action1",
            ApiFunction::EnterText => "enter_text_action",
            ApiFunction::Scroll => "scroll_action1",
        }
    }

    fn from_grammar_name(name: &str) -> Option<Self> {
        match name {
            "click_action1" => Some(ApiFunction::Click),
            "enter_text_action" => Some(ApiFunction::EnterText),
            "scroll_action1" => Some(ApiFunction::Scroll),
            _ => None,
        }
    }
}

/// Raw completion text as returned by a backend.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratedText {
    pub raw: String,
}

impl<T: Into<String>> From<T> for GeneratedText {
    fn from(raw: T) -> Self {
        Self { raw: raw.into() }
    }
}

/// One recognized API call with its literal string arguments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionCall {
    pub function: ApiFunction,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Statement {
    Action(ActionCall),
    /// The five-tuple `env.step` confirmation line; consumed, never stepped.
    StepCall,
    Unsupported { line: String, reason: String },
}

/// An extracted program. `usable` holds exactly when at least one action
/// call was recognized.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub statements: Vec<Statement>,
    pub usable: bool,
}

impl Program {
    pub fn action_calls(&self) -> impl Iterator<Item = &ActionCall> {
        self.statements.iter().filter_map(|s| match s {
            Statement::Action(call) => Some(call),
            _ => None,
        })
    }

    pub fn step_calls(&self) -> usize {
        self.statements.iter().filter(|s| matches!(s, Statement::StepCall)).count()
    }
}

/// The canonical step line appended after each action.
pub const STEP_LINE: &str = "observation, reward, terminated, truncated, info = env.step(action)";

static ACTION_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*action\s*=\s*(click_action1|enter_text_action|scroll_action1)\s*\((.*)\)\s*$")
        .expect("valid regex")
});
static STEP_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"^\s*observation\s*,\s*reward\s*,\s*terminated\s*,\s*truncated\s*,\s*info\s*=\s*env\.step\(\s*action\s*\)\s*$",
    )
    .expect("valid regex")
});
static GET_SUMMARY_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"^\s*\w+\s*=\s*getSummary\s*\(.*\)\s*$").expect("valid regex")
});
static CONTROL_FLOW_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(if|elif|else|for|while)\b").expect("valid regex"));

/// Scans text line by line and keeps every recognized action and step line.
/// Total over arbitrary input; unrecognized content becomes `Unsupported`.
pub fn extract_program(text: &GeneratedText) -> Program {
    let mut statements = Vec::new();
    // Indentation of the innermost open control-flow line, if any.
    let mut block_indent: Option<usize> = None;
    for line in text.raw.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let indent = line.len() - line.trim_start().len();
        if let Some(open) = block_indent {
            if indent > open {
                statements.push(unsupported(line, "inside control-flow block"));
                continue;
            }
            block_indent = None;
        }
        if STEP_RE.is_match(line) {
            statements.push(Statement::StepCall);
            continue;
        }
        if let Some(captures) = ACTION_RE.captures(line) {
            let function = ApiFunction::from_grammar_name(&captures[1]).expect("regex alternatives");
            match parse_args(&captures[2]) {
                Some(args) => {
                    statements.push(Statement::Action(ActionCall { function, args }));
                    continue;
                }
                None => {
                    statements.push(unsupported(line, "non-literal argument"));
                    continue;
                }
            }
        }
        if trimmed.starts_with("```") {
            statements.push(unsupported(line, "code fence"));
            continue;
        }
        if trimmed.starts_with('#') {
            statements.push(unsupported(line, "comment"));
            continue;
        }
        if GET_SUMMARY_RE.is_match(line) {
            // Observation refresh is implicit per step; the call is a no-op.
            statements.push(unsupported(line, "getSummary handled by the framework"));
            continue;
        }
        if CONTROL_FLOW_RE.is_match(&strip_quoted(line)) {
            block_indent = Some(indent);
            statements.push(unsupported(line, "control flow is not interpreted"));
            continue;
        }
        statements.push(unsupported(line, "unrecognized line"));
    }
    let usable = statements.iter().any(|s| matches!(s, Statement::Action(_)));
    Program { statements, usable }
}

fn unsupported(line: &str, reason: &str) -> Statement {
    Statement::Unsupported { line: line.to_string(), reason: reason.to_string() }
}

/// Replaces quoted spans with blanks so keyword scanning ignores literals.
fn strip_quoted(line: &str) -> String {
    let mut out = String::with_capacity(line.len());
    let mut quote: Option<char> = None;
    let mut escaped = false;
    for c in line.chars() {
        match quote {
            Some(q) => {
                if escaped {
                    escaped = false;
                } else if c == '\\' {
                    escaped = true;
                } else if c == q {
                    quote = None;
                }
                out.push(' ');
            }
            None => {
                if c == '\'' || c == '"' {
                    quote = Some(c);
                    out.push(' ');
                } else {
                    out.push(c);
                }
            }
        }
    }
    out
}

/// Parses an argument list. Literal strings may carry a keyword prefix
/// (`text='one'`); the bare identifier `observation` is permitted and
/// dropped. Anything else makes the whole list non-literal.
fn parse_args(list: &str) -> Option<Vec<String>> {
    let mut args = Vec::new();
    let chars: Vec<char> = list.chars().collect();
    let mut i = 0;
    let skip_ws = |i: &mut usize| {
        while *i < chars.len() && chars[*i].is_whitespace() {
            *i += 1;
        }
    };
    skip_ws(&mut i);
    if i == chars.len() {
        return Some(args);
    }
    loop {
        skip_ws(&mut i);
        if i == chars.len() {
            return None; // trailing comma
        }
        let c = chars[i];
        if c == '\'' || c == '"' {
            args.push(read_string(&chars, &mut i)?);
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let ident: String = chars[start..i].iter().collect();
            skip_ws(&mut i);
            if i < chars.len() && chars[i] == '=' {
                // Keyword argument; only quoted values are literal.
                i += 1;
                skip_ws(&mut i);
                if i == chars.len() || (chars[i] != '\'' && chars[i] != '"') {
                    return None;
                }
                args.push(read_string(&chars, &mut i)?);
            } else if ident != "observation" {
                return None;
            }
        } else {
            return None;
        }
        skip_ws(&mut i);
        if i == chars.len() {
            return Some(args);
        }
        if chars[i] != ',' {
            return None;
        }
        i += 1;
    }
}

/// Reads one quoted string starting at `chars[*i]`, handling the escapes the
/// API examples use (`\n`, `\t`, `\\`, `\'`, `\"`).
fn read_string(chars: &[char], i: &mut usize) -> Option<String> {
    let quote = chars[*i];
    *i += 1;
    let mut out = String::new();
    while *i < chars.len() {
        let c = chars[*i];
        *i += 1;
        if c == '\\' {
            if *i == chars.len() {
                return None;
            }
            let escaped = chars[*i];
            *i += 1;
            out.push(match escaped {
                'n' => '\n',
                't' => '\t',
                other => other,
            });
        } else if c == quote {
            return Some(out);
        } else {
            out.push(c);
        }
    }
    None // unterminated
}

fn escape_literal(value: &str) -> String {
    let mut out = String::with_capacity(value.len());
    for c in value.chars() {
        match c {
            '\\' => out.push_str("\\\\"),
            '\'' => out.push_str("\\'"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            other => out.push(other),
        }
    }
    out
}

/// Renders one action line in the canonical single-quoted form.
pub fn action_line(function: ApiFunction, args: &[String]) -> String {
    let mut rendered: Vec<String> =
        args.iter().map(|a| format!("'{}'", escape_literal(a))).collect();
    rendered.push("observation".to_string());
    format!("action = {}({})", function.grammar_name(), rendered.join(", "))
}

/// Canonical text form of a program: one action line plus one step line per
/// action call. Re-extracting yields the same action call sequence.
pub fn pretty_print(program: &Program) -> String {
    program
        .action_calls()
        .map(|call| format!("{}\n{}", action_line(call.function, &call.args), STEP_LINE))
        .collect::<Vec<_>>()
        .join("\n")
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("program has no usable action calls")]
    ProgramUnusable,
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// Result of running a program: the last step outcome, the per-action trace,
/// and the resolution failure that stopped execution early, if any.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionResult {
    pub final_outcome: StepOutcome,
    pub trace: Vec<(ActionCall, StepOutcome)>,
    pub aborted_reason: Option<String>,
}

/// Executes a program's action calls in order, one environment step per call.
/// Step lines are consumed as confirmations and never step on their own; a
/// missing step line does not suppress the step. Execution stops at episode
/// termination or truncation, and a resolution error stops it without ending
/// the episode.
pub fn execute_program(
    program: &Program,
    state: &mut EpisodeState,
) -> Result<ExecutionResult, ProgramError> {
    if !program.usable {
        return Err(ProgramError::ProgramUnusable);
    }
    if state.finished() {
        return Err(ProgramError::Env(EnvError::EpisodeFinished));
    }
    let mut trace = Vec::new();
    let mut aborted_reason = None;
    for statement in &program.statements {
        let Statement::Action(call) = statement else { continue };
        let obs = state.observation();
        let resolved = match call.function {
            ApiFunction::Click => {
                if call.args.len() < 2 {
                    Err(format!("click_action1 needs 2 string arguments, got {}", call.args.len()))
                } else {
                    click_action(&call.args[0], &call.args[1], &obs).map_err(|e| e.to_string())
                }
            }
            ApiFunction::EnterText => {
                if call.args.is_empty() {
                    Err("enter_text_action needs 1 string argument".to_string())
                } else {
                    enter_text_action(&call.args[0], &obs, state.focused_element())
                        .map_err(|e| e.to_string())
                }
            }
            ApiFunction::Scroll => {
                if call.args.is_empty() {
                    Err("scroll_action1 needs 1 string argument".to_string())
                } else {
                    scroll_action(&call.args[0], &obs).map_err(|e| e.to_string())
                }
            }
        };
        match resolved {
            Err(reason) => {
                aborted_reason = Some(reason);
                break;
            }
            Ok(action) => {
                let outcome = state.step(&action)?;
                let done = outcome.terminated || outcome.truncated;
                trace.push((call.clone(), outcome));
                if done {
                    break;
                }
            }
        }
    }
    let final_outcome = trace.last().map(|(_, outcome)| outcome.clone()).unwrap_or(StepOutcome {
        observation: state.observation(),
        reward: state.reward(),
        terminated: state.terminated(),
        truncated: state.truncated(),
        info: BTreeMap::new(),
    });
    Ok(ExecutionResult { final_outcome, trace, aborted_reason })
}
