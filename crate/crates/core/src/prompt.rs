//! Prompt assembly: the fixed system messages, the API text, the selectable
//! task message for multi-step methods, in-context examples, and the task
//! query, in that order.
//!
//! All prompt texts ship as embedded assets under `assets/prompts/`. Assembly
//! is deterministic: identical inputs produce byte-identical bundles.

use serde::{Deserialize, Serialize};

use crate::agent::{MethodKind, MethodVariant};

/// First system message, shared by every method.
pub const SYSTEM_MESSAGE: &str = include_str!("../assets/prompts/system_message.txt");
/// Second system message, placed after the API text.
pub const SOLUTION_DESCRIPTION: &str = include_str!("../assets/prompts/solution_description.txt");
/// The full API text shown to the model.
pub const API_TEXT: &str = include_str!("../assets/prompts/api.txt");
/// Sentence prefixed to every auto-generated in-context example.
pub const ACG_PREAMBLE: &str = "Here is one example you have solved with a successful solution.";

/// The selectable third system message for multi-step methods, 13 variants.
pub const TASK_MESSAGES: [&str; 13] = [
    include_str!("../assets/prompts/task_message_01.txt"),
    include_str!("../assets/prompts/task_message_02.txt"),
    include_str!("../assets/prompts/task_message_03.txt"),
    include_str!("../assets/prompts/task_message_04.txt"),
    include_str!("../assets/prompts/task_message_05.txt"),
    include_str!("../assets/prompts/task_message_06.txt"),
    include_str!("../assets/prompts/task_message_07.txt"),
    include_str!("../assets/prompts/task_message_08.txt"),
    include_str!("../assets/prompts/task_message_09.txt"),
    include_str!("../assets/prompts/task_message_10.txt"),
    include_str!("../assets/prompts/task_message_11.txt"),
    include_str!("../assets/prompts/task_message_12.txt"),
    include_str!("../assets/prompts/task_message_13.txt"),
];

/// Looks up a task message by its 1-based variant number.
pub fn task_message(variant: u8) -> Option<&'static str> {
    TASK_MESSAGES.get(variant.checked_sub(1)? as usize).copied()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub role: Role,
    pub content: String,
}

impl Message {
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        let content = content.into();
        debug_assert!(!content.is_empty(), "message content must be nonempty");
        Self { role, content }
    }
}

/// An assembled prompt plus its deterministic token estimate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub messages: Vec<Message>,
    pub token_estimate: usize,
}

impl PromptBundle {
    pub fn new(messages: Vec<Message>) -> Self {
        let token_estimate = estimate_message_tokens(&messages);
        Self { messages, token_estimate }
    }
}

/// A worked (observation, task, program) triple for in-context learning.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextExample {
    pub task_description: String,
    pub serialized_observation: String,
    pub program_text: String,
    pub origin: ExampleOrigin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExampleOrigin {
    Manual,
    Auto,
}

/// Which completion backend serves requests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BackendKind {
    Remote,
    Scripted,
}

impl std::str::FromStr for BackendKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "remote" => Ok(BackendKind::Remote),
            "scripted" => Ok(BackendKind::Scripted),
            other => Err(format!("unknown backend '{other}' (expected remote or scripted)")),
        }
    }
}

/// Model and budget settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmConfig {
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: usize,
    /// 1-based index into [`TASK_MESSAGES`].
    pub task_message_variant: u8,
    pub backend: BackendKind,
}

impl Default for LlmConfig {
    fn default() -> Self {
        Self {
            model_name: "gpt-3.5-turbo".to_string(),
            temperature: 0.0,
            max_tokens: 4096,
            task_message_variant: 4,
            backend: BackendKind::Scripted,
        }
    }
}

impl LlmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.temperature < 0.0 {
            return Err("temperature must be nonnegative".to_string());
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".to_string());
        }
        if task_message(self.task_message_variant).is_none() {
            return Err(format!(
                "task_message_variant must be in 1..={}, got {}",
                TASK_MESSAGES.len(),
                self.task_message_variant
            ));
        }
        Ok(())
    }
}

fn estimate_message_tokens(messages: &[Message]) -> usize {
    let chars: usize = messages.iter().map(|m| m.content.chars().count()).sum();
    chars.div_ceil(4)
}

/// Deterministic token estimate: one token per four content characters,
/// rounded up.
pub fn estimate_tokens(bundle: &PromptBundle) -> usize {
    estimate_message_tokens(&bundle.messages)
}

/// Drops lines that start with the objects-in-image marker; used by the
/// instruction-only method, which carries no observation text.
fn strip_objects_lines(text: &str) -> String {
    text.lines()
        .filter(|line| !line.trim_start().starts_with("Objects in Image"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn render_example(example: &ContextExample, variant: MethodVariant) -> String {
    let mut out = String::new();
    if example.origin == ExampleOrigin::Auto {
        out.push_str(ACG_PREAMBLE);
        out.push('\n');
    }
    if variant != MethodVariant::InstructionOnly {
        out.push_str("Objects in Image:\n");
        out.push_str(&example.serialized_observation);
        out.push('\n');
    }
    out.push_str("Task: ");
    out.push_str(&example.task_description);
    out.push_str("\nSolution:\n");
    out.push_str(&example.program_text);
    out
}

fn render_query(instruction: &str, obs_text: &str, variant: MethodVariant) -> String {
    let mut out = String::new();
    if variant != MethodVariant::InstructionOnly {
        out.push_str("Objects in Image:\n");
        out.push_str(obs_text);
        out.push('\n');
    }
    out.push_str("Task: ");
    out.push_str(instruction);
    out.push_str("\nSolution?");
    out
}

/// Builds the full prompt for one completion: system message, API text,
/// solution description, the task message for multi-step methods, the
/// in-context examples, and the task query. `obs_text` must be empty exactly
/// when the method is instruction-only.
pub fn assemble_prompt(
    method: &MethodKind,
    examples: &[ContextExample],
    instruction: &str,
    obs_text: &str,
    cfg: &LlmConfig,
) -> PromptBundle {
    debug_assert_eq!(
        obs_text.is_empty(),
        method.variant == MethodVariant::InstructionOnly,
        "observation text is empty iff the method is instruction-only"
    );
    let mut messages = Vec::new();
    let api_text = if method.variant == MethodVariant::InstructionOnly {
        strip_objects_lines(API_TEXT)
    } else {
        API_TEXT.to_string()
    };
    messages.push(Message::new(Role::System, SYSTEM_MESSAGE));
    messages.push(Message::new(Role::System, api_text));
    messages.push(Message::new(Role::System, SOLUTION_DESCRIPTION));
    if method.variant == MethodVariant::WebWise {
        let text = task_message(cfg.task_message_variant)
            .expect("validated task message variant");
        messages.push(Message::new(Role::System, text));
    }
    for example in examples {
        messages.push(Message::new(Role::User, render_example(example, method.variant)));
    }
    messages.push(Message::new(Role::User, render_query(instruction, obs_text, method.variant)));
    PromptBundle::new(messages)
}

/// The hand-written in-context example bundled for a task, if any.
pub fn manual_example(task_id: &str) -> Option<ContextExample> {
    #[derive(Deserialize)]
    struct FileExample {
        task_description: String,
        serialized_observation: String,
        program_text: String,
    }
    const SOURCES: [(&str, &str); 10] = [
        ("click-test", include_str!("../assets/examples/click-test.json")),
        ("click-button", include_str!("../assets/examples/click-button.json")),
        ("click-dialog-2", include_str!("../assets/examples/click-dialog-2.json")),
        (
            "click-checkboxes-transfer",
            include_str!("../assets/examples/click-checkboxes-transfer.json"),
        ),
        ("click-tab-2-easy", include_str!("../assets/examples/click-tab-2-easy.json")),
        ("click-collapsible", include_str!("../assets/examples/click-collapsible.json")),
        ("enter-text", include_str!("../assets/examples/enter-text.json")),
        ("login-user", include_str!("../assets/examples/login-user.json")),
        ("guess-number", include_str!("../assets/examples/guess-number.json")),
        ("navigate-tree", include_str!("../assets/examples/navigate-tree.json")),
    ];
    let source = SOURCES.iter().find(|(id, _)| *id == task_id)?.1;
    let parsed: FileExample = serde_json::from_str(source).expect("bundled example parses");
    Some(ContextExample {
        task_description: parsed.task_description,
        serialized_observation: parsed.serialized_observation,
        program_text: parsed.program_text,
        origin: ExampleOrigin::Manual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::{MethodKind, MethodVariant};
    use crate::env::list_tasks;
    use crate::program::{extract_program, GeneratedText};

    fn method(variant: MethodVariant, k: u8) -> MethodKind {
        MethodKind { variant, k }
    }

    #[test]
    fn webwise_bundle_holds_three_system_messages_and_example() {
        let example = manual_example("click-test").unwrap();
        let bundle = assemble_prompt(
            &method(MethodVariant::WebWise, 1),
            std::slice::from_ref(&example),
            "Click the button.",
            "button [text=ONE]",
            &LlmConfig::default(),
        );
        let system: Vec<&str> = bundle
            .messages
            .iter()
            .filter(|m| m.role == Role::System)
            .map(|m| m.content.as_str())
            .collect();
        assert!(system.contains(&SYSTEM_MESSAGE));
        assert!(system.contains(&SOLUTION_DESCRIPTION));
        assert!(system.contains(&task_message(4).unwrap()));
        let users: Vec<&Message> =
            bundle.messages.iter().filter(|m| m.role == Role::User).collect();
        assert_eq!(users.len(), 2, "one example, one query");
        assert!(users[0].content.contains(&example.program_text));
    }

    #[test]
    fn single_step_methods_omit_the_task_message() {
        let bundle = assemble_prompt(
            &method(MethodVariant::SingleStepFiltered, 0),
            &[],
            "Click the button.",
            "button [text=ONE]",
            &LlmConfig::default(),
        );
        assert!(!bundle.messages.iter().any(|m| m.content == task_message(4).unwrap()));
    }

    #[test]
    fn system_messages_precede_examples_precede_query() {
        let example = manual_example("enter-text").unwrap();
        let bundle = assemble_prompt(
            &method(MethodVariant::SingleStepFiltered, 1),
            std::slice::from_ref(&example),
            "Enter \"x\".",
            "input_text [id=answer]",
            &LlmConfig::default(),
        );
        let last_system = bundle
            .messages
            .iter()
            .rposition(|m| m.role == Role::System)
            .unwrap();
        let first_user = bundle.messages.iter().position(|m| m.role == Role::User).unwrap();
        assert!(last_system < first_user);
        assert!(bundle.messages.last().unwrap().content.ends_with("Solution?"));
    }

    #[test]
    fn acg_examples_carry_the_preamble_once_each() {
        let auto = ContextExample {
            task_description: "Click the button.".into(),
            serialized_observation: "button [text=ONE]".into(),
            program_text: "action = click_action1('button', 'ONE', observation)".into(),
            origin: ExampleOrigin::Auto,
        };
        let bundle = assemble_prompt(
            &method(MethodVariant::SingleStepFiltered, 0),
            &[auto.clone(), auto],
            "Click the button.",
            "button [text=ONE]",
            &LlmConfig::default(),
        );
        let total: usize =
            bundle.messages.iter().map(|m| m.content.matches(ACG_PREAMBLE).count()).sum();
        assert_eq!(total, 2);
        // Manual examples carry no preamble.
        let manual = manual_example("click-test").unwrap();
        let bundle = assemble_prompt(
            &method(MethodVariant::SingleStepFiltered, 1),
            &[manual],
            "Click the button.",
            "button [text=ONE]",
            &LlmConfig::default(),
        );
        assert!(bundle.messages.iter().all(|m| !m.content.contains(ACG_PREAMBLE)));
    }

    #[test]
    fn instruction_only_has_no_objects_line() {
        let example = manual_example("click-test").unwrap();
        let bundle = assemble_prompt(
            &method(MethodVariant::InstructionOnly, 1),
            &[example],
            "Click the button.",
            "",
            &LlmConfig::default(),
        );
        for message in &bundle.messages {
            for line in message.content.lines() {
                assert!(
                    !line.trim_start().starts_with("Objects in Image"),
                    "instruction-only prompt leaked an objects line: {line}"
                );
            }
        }
    }

    #[test]
    fn token_estimate_is_chars_over_four_rounded_up() {
        let bundle = PromptBundle::new(vec![Message::new(Role::User, "abcd")]);
        assert_eq!(estimate_tokens(&bundle), 1);
        assert_eq!(estimate_tokens(&PromptBundle::new(vec![])), 0);
        let big = PromptBundle::new(vec![Message::new(Role::User, "x".repeat(20_000))]);
        assert_eq!(estimate_tokens(&big), 5_000);
        assert!(estimate_tokens(&big) > LlmConfig::default().max_tokens);
    }

    #[test]
    fn sweeping_variants_changes_only_the_third_system_message() {
        let make = |variant: u8| {
            let cfg = LlmConfig { task_message_variant: variant, ..LlmConfig::default() };
            assemble_prompt(
                &method(MethodVariant::WebWise, 0),
                &[],
                "Click the button.",
                "button [text=ONE]",
                &cfg,
            )
        };
        let base = make(1);
        for variant in 2..=13 {
            let other = make(variant);
            assert_eq!(base.messages.len(), other.messages.len());
            for (i, (a, b)) in base.messages.iter().zip(&other.messages).enumerate() {
                if i == 3 {
                    assert_ne!(a.content, b.content, "variant {variant} must differ");
                } else {
                    assert_eq!(a, b, "message {i} must not depend on the variant");
                }
            }
        }
    }

    #[test]
    fn assembly_is_deterministic() {
        let build = || {
            assemble_prompt(
                &method(MethodVariant::SingleStepFiltered, 0),
                &[],
                "Click the button.",
                "button [text=ONE]",
                &LlmConfig::default(),
            )
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn every_task_ships_a_usable_manual_example() {
        for task in list_tasks() {
            let example = manual_example(&task.task_id)
                .unwrap_or_else(|| panic!("missing example for {}", task.task_id));
            let program = extract_program(&GeneratedText::from(example.program_text));
            assert!(program.usable, "example for {} must extract as usable", task.task_id);
        }
    }

    #[test]
    fn config_validation_rejects_bad_values() {
        assert!(LlmConfig::default().validate().is_ok());
        assert!(LlmConfig { temperature: -1.0, ..Default::default() }.validate().is_err());
        assert!(LlmConfig { max_tokens: 0, ..Default::default() }.validate().is_err());
        assert!(LlmConfig { task_message_variant: 14, ..Default::default() }.validate().is_err());
        assert!(LlmConfig { task_message_variant: 0, ..Default::default() }.validate().is_err());
    }
}
