//! Seeded, deterministic simulator of MiniWob++-style web tasks.
//!
//! Every episode is a pure function of `(task_id, seed, action sequence)`:
//! resetting the same pair twice yields byte-identical instructions and
//! observations, and the same actions produce the same trajectory. Episodes
//! terminate with reward +1 (success) or -1 (failure); any non-terminal step
//! has reward 0. After [`MAX_EPISODE_STEPS`] steps an episode is truncated,
//! which callers score as a failure.

pub mod solver;
mod tasks;
mod words;

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::actions::Action;
use crate::dom::{DomElement, ElementId, Observation};

/// Environment step budget per episode.
pub const MAX_EPISODE_STEPS: u32 = 30;

/// Function-count grouping used for report aggregation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FunctionCount {
    One,
    Two,
    ThreeToSix,
    Variable,
}

impl FunctionCount {
    /// All categories, in report column order.
    pub const ALL: [FunctionCount; 4] =
        [FunctionCount::One, FunctionCount::Two, FunctionCount::ThreeToSix, FunctionCount::Variable];

    pub fn label(self) -> &'static str {
        match self {
            FunctionCount::One => "1 Function",
            FunctionCount::Two => "2 Function",
            FunctionCount::ThreeToSix => "3-6 Function",
            FunctionCount::Variable => "Variable Function",
        }
    }
}

/// Static classification of one bundled task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskMetadata {
    pub task_id: String,
    pub num_functions_category: FunctionCount,
    /// Whether wrong terminal answers are present (clicking one fails the
    /// episode).
    pub incorrect_answers_present: bool,
    /// Whether the target element is absent from the initial DOM and only
    /// appears after some other action.
    pub target_not_in_initial_dom: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("unknown task '{0}'")]
    UnknownTask(String),
    #[error("episode already finished")]
    EpisodeFinished,
}

/// The five-tuple consumed by generated programs' step lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub observation: Observation,
    pub reward: i8,
    pub terminated: bool,
    pub truncated: bool,
    pub info: BTreeMap<String, String>,
}

/// Mutable page and scoring state shared between the generic step machinery
/// and the per-task logic.
#[derive(Debug, Clone)]
pub(crate) struct EpisodeCore {
    pub(crate) task_id: String,
    pub(crate) seed: u64,
    pub(crate) instruction: String,
    pub(crate) elements: Vec<DomElement>,
    pub(crate) interaction_log: BTreeSet<ElementId>,
    pub(crate) focused: Option<ElementId>,
    pub(crate) step_count: u32,
    pub(crate) terminated: bool,
    pub(crate) truncated: bool,
    pub(crate) reward: i8,
}

impl EpisodeCore {
    fn new(task_id: &str, seed: u64, instruction: String, elements: Vec<DomElement>) -> Self {
        Self {
            task_id: task_id.to_string(),
            seed,
            instruction,
            elements,
            interaction_log: BTreeSet::new(),
            focused: None,
            step_count: 0,
            terminated: false,
            truncated: false,
            reward: 0,
        }
    }

    pub(crate) fn element(&self, id: ElementId) -> Option<&DomElement> {
        self.elements.iter().find(|e| e.element_id == id)
    }

    pub(crate) fn element_mut(&mut self, id: ElementId) -> Option<&mut DomElement> {
        self.elements.iter_mut().find(|e| e.element_id == id)
    }

    pub(crate) fn element_text(&self, id: ElementId) -> String {
        self.element(id).and_then(|e| e.text.clone()).unwrap_or_default()
    }

    pub(crate) fn set_visible(&mut self, id: ElementId, visible: bool) {
        if let Some(e) = self.element_mut(id) {
            e.visible = visible;
        }
    }

    /// Inserts an element into the page at its document-order position.
    pub(crate) fn show_element(&mut self, element: DomElement) {
        let at = self
            .elements
            .iter()
            .position(|e| e.doc_order > element.doc_order)
            .unwrap_or(self.elements.len());
        self.elements.insert(at, element);
    }

    pub(crate) fn succeed(&mut self) {
        self.reward = 1;
        self.terminated = true;
    }

    pub(crate) fn fail(&mut self) {
        self.reward = -1;
        self.terminated = true;
    }
}

/// One running episode. Drive it with [`EpisodeState::step`].
#[derive(Debug, Clone)]
pub struct EpisodeState {
    pub(crate) core: EpisodeCore,
    pub(crate) logic: tasks::TaskLogic,
}

impl EpisodeState {
    pub fn task_id(&self) -> &str {
        &self.core.task_id
    }

    pub fn seed(&self) -> u64 {
        self.core.seed
    }

    /// The natural-language instruction, verbatim as generated at reset.
    pub fn instruction(&self) -> &str {
        &self.core.instruction
    }

    pub fn observation(&self) -> Observation {
        Observation {
            elements: self.core.elements.clone(),
            interaction_log: self.core.interaction_log.clone(),
        }
    }

    pub fn focused_element(&self) -> Option<ElementId> {
        self.core.focused
    }

    pub fn step_count(&self) -> u32 {
        self.core.step_count
    }

    pub fn terminated(&self) -> bool {
        self.core.terminated
    }

    pub fn truncated(&self) -> bool {
        self.core.truncated
    }

    pub fn reward(&self) -> i8 {
        self.core.reward
    }

    pub fn finished(&self) -> bool {
        self.core.terminated || self.core.truncated
    }

    /// Applies one action. Clicks toggle checkboxes, focus text fields, and
    /// drive the per-task logic (expanding tabs, collapsibles and folders,
    /// pressing buttons); text entry writes into the focused element, with a
    /// trailing `"\n"` submitting the enclosing form; scrolling makes the
    /// target element visible.
    pub fn step(&mut self, action: &Action) -> Result<StepOutcome, EnvError> {
        if self.finished() {
            return Err(EnvError::EpisodeFinished);
        }
        let mut info = BTreeMap::new();
        match action {
            Action::Click { element_id } => self.apply_click(*element_id, &mut info),
            Action::EnterText { text } => self.apply_enter_text(text, &mut info),
            Action::Scroll { element_id } => self.apply_scroll(*element_id, &mut info),
        }
        self.core.step_count += 1;
        if !self.core.terminated && self.core.step_count >= MAX_EPISODE_STEPS {
            self.core.truncated = true;
            info.insert("truncated".to_string(), "step budget exhausted".to_string());
        }
        Ok(StepOutcome {
            observation: self.observation(),
            reward: self.core.reward,
            terminated: self.core.terminated,
            truncated: self.core.truncated,
            info,
        })
    }

    fn apply_click(&mut self, id: ElementId, info: &mut BTreeMap<String, String>) {
        let (visible, focusable, toggles) = match self.core.element(id) {
            Some(e) => {
                (e.visible, e.focusable, matches!(e.tag.as_str(), "input_checkbox" | "input_radio"))
            }
            None => {
                info.insert("error".to_string(), "no such element".to_string());
                return;
            }
        };
        if !visible {
            info.insert("error".to_string(), "not visible".to_string());
            return;
        }
        self.core.interaction_log.insert(id);
        if focusable {
            self.core.focused = Some(id);
        }
        if toggles {
            let element = self.core.element_mut(id).expect("element exists");
            element.checked = Some(!element.checked.unwrap_or(false));
        }
        self.logic.on_click(&mut self.core, id, info);
    }

    fn apply_enter_text(&mut self, text: &str, info: &mut BTreeMap<String, String>) {
        let Some(id) = self.core.focused else {
            info.insert("error".to_string(), "no focused element".to_string());
            return;
        };
        let submits = text.ends_with('\n');
        let content = text.strip_suffix('\n').unwrap_or(text);
        match self.core.element_mut(id) {
            Some(e) if e.focusable => e.text = Some(content.to_string()),
            _ => {
                info.insert("error".to_string(), "focused element cannot accept text".to_string());
                return;
            }
        }
        self.core.interaction_log.insert(id);
        if submits {
            self.logic.on_submit(&mut self.core, info);
        }
    }

    fn apply_scroll(&mut self, id: ElementId, info: &mut BTreeMap<String, String>) {
        match self.core.element_mut(id) {
            Some(e) => e.visible = true,
            None => {
                info.insert("error".to_string(), "no such element".to_string());
            }
        }
    }
}

/// The full bundled task catalog, in a stable order.
pub fn list_tasks() -> Vec<TaskMetadata> {
    tasks::catalog()
}

/// Looks up one task's metadata.
pub fn task_metadata(task_id: &str) -> Result<TaskMetadata, EnvError> {
    tasks::catalog()
        .into_iter()
        .find(|t| t.task_id == task_id)
        .ok_or_else(|| EnvError::UnknownTask(task_id.to_string()))
}

/// Starts an episode. Deterministic in `(task_id, seed)`.
pub fn reset(task_id: &str, seed: u64) -> Result<EpisodeState, EnvError> {
    let (core, logic) =
        tasks::build(task_id, seed).ok_or_else(|| EnvError::UnknownTask(task_id.to_string()))?;
    Ok(EpisodeState { core, logic })
}
