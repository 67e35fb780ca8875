//! Reference solver for the bundled tasks.
//!
//! Given a freshly reset episode, [`solve`] returns the exact call sequence
//! that completes it, grouped into phases: each phase only references
//! elements present in the page once every earlier phase has run, which makes
//! the plan directly usable as a per-iteration script for the multi-step
//! method. Fixture authoring and the reachability tests are the intended
//! consumers.

use super::tasks::TaskLogic;
use super::EpisodeState;
use crate::actions::{click_action, enter_text_action, scroll_action, Action, ActionError};
use crate::dom::{ElementId, Observation};
use crate::program::{action_line, ApiFunction, STEP_LINE};

/// One API call with the literal arguments a generated program would carry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolvedCall {
    pub function: ApiFunction,
    pub args: Vec<String>,
}

impl SolvedCall {
    fn click(tag_class: &str, id_text: &str) -> Self {
        Self { function: ApiFunction::Click, args: vec![tag_class.into(), id_text.into()] }
    }

    fn enter(text: &str) -> Self {
        Self { function: ApiFunction::EnterText, args: vec![text.into()] }
    }

    /// Resolves the call against an observation, exactly as the interpreter
    /// would.
    pub fn resolve(
        &self,
        obs: &Observation,
        focused: Option<ElementId>,
    ) -> Result<Action, ActionError> {
        match self.function {
            ApiFunction::Click => click_action(&self.args[0], &self.args[1], obs),
            ApiFunction::EnterText => enter_text_action(&self.args[0], obs, focused),
            ApiFunction::Scroll => scroll_action(&self.args[0], obs),
        }
    }

    /// The call as program text: one action line plus the step line.
    pub fn render(&self) -> String {
        format!("{}\n{}", action_line(self.function, &self.args), STEP_LINE)
    }
}

/// A complete solution, one phase per required observation of the page.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SolverPlan {
    pub phases: Vec<Vec<SolvedCall>>,
}

impl SolverPlan {
    /// One program per phase, for multi-step scripts.
    pub fn phase_programs(&self) -> Vec<String> {
        self.phases.iter().map(|phase| render_program(phase)).collect()
    }

    /// All phases concatenated into one straight-line program.
    pub fn single_program(&self) -> String {
        let calls: Vec<SolvedCall> = self.phases.iter().flatten().cloned().collect();
        render_program(&calls)
    }

    pub fn call_count(&self) -> usize {
        self.phases.iter().map(Vec::len).sum()
    }
}

fn render_program(calls: &[SolvedCall]) -> String {
    calls.iter().map(SolvedCall::render).collect::<Vec<_>>().join("\n")
}

/// Computes the solution for a freshly reset episode.
pub fn solve(state: &EpisodeState) -> SolverPlan {
    let core = &state.core;
    let phases = match &state.logic {
        TaskLogic::ClickTest { button } => {
            vec![vec![SolvedCall::click("button", &core.element_text(*button))]]
        }
        TaskLogic::ClickButton { more, target, .. } => vec![
            vec![SolvedCall::click("button", &core.element_text(*more))],
            vec![SolvedCall::click("button", target.text.as_deref().unwrap_or_default())],
        ],
        TaskLogic::ClickDialog2 { target, .. } => {
            vec![vec![SolvedCall::click("button", &core.element_text(*target))]]
        }
        TaskLogic::ClickCheckboxes { boxes, required, submit } => {
            let mut calls = Vec::new();
            for id in boxes {
                let checked =
                    core.element(*id).and_then(|e| e.checked).unwrap_or(false);
                if checked != required.contains(id) {
                    calls.push(SolvedCall::click("input_checkbox", &core.element_text(*id)));
                }
            }
            calls.push(SolvedCall::click("button", &core.element_text(*submit)));
            vec![calls]
        }
        TaskLogic::ClickTab2Easy { tab_links, target, .. } => {
            let tab = tab_links
                .iter()
                .position(|links| links.contains(target))
                .expect("target belongs to a tab");
            vec![
                vec![SolvedCall::click("a", &format!("Tab #{}", tab + 1))],
                vec![SolvedCall::click("a", &core.element_text(*target))],
            ]
        }
        TaskLogic::ClickCollapsible { header, section, .. } => {
            let submit = section
                .iter()
                .find(|id| core.element(**id).is_some_and(|e| e.tag == "button"))
                .expect("section holds a submit button");
            vec![
                vec![SolvedCall::click("h3", &core.element_text(*header))],
                vec![SolvedCall::click("button", &core.element_text(*submit))],
            ]
        }
        TaskLogic::EnterText { field, submit, expected } => vec![vec![
            SolvedCall::click("input_text", &field_key(core, *field)),
            SolvedCall::enter(expected),
            SolvedCall::click("button", &core.element_text(*submit)),
        ]],
        TaskLogic::LoginUser { username_field, password_field, submit, username, password } => {
            vec![vec![
                SolvedCall::click("input_text", &field_key(core, *username_field)),
                SolvedCall::enter(username),
                SolvedCall::click("input_password", &field_key(core, *password_field)),
                SolvedCall::enter(password),
                SolvedCall::click("button", &core.element_text(*submit)),
            ]]
        }
        TaskLogic::GuessNumber { field, target, .. } => vec![vec![
            SolvedCall::click("input_number", &field_key(core, *field)),
            // The trailing newline submits the form.
            SolvedCall::enter(&format!("{target}\n")),
        ]],
        TaskLogic::NavigateTree { nodes, target, .. } => {
            let node_for = |id: ElementId| {
                nodes.iter().find(|n| n.element.element_id == id).expect("node exists")
            };
            let mut chain = Vec::new();
            let mut cursor = node_for(*target).parent;
            while let Some(parent) = cursor {
                let node = node_for(parent);
                if node.is_folder {
                    chain.push(node.element.text.clone().unwrap_or_default());
                }
                cursor = node.parent;
            }
            chain.reverse();
            let mut phases: Vec<Vec<SolvedCall>> =
                chain.iter().map(|name| vec![SolvedCall::click("folder", name)]).collect();
            phases.push(vec![SolvedCall::click(
                "a",
                node_for(*target).element.text.as_deref().unwrap_or_default(),
            )]);
            phases
        }
    };
    SolverPlan { phases }
}

/// Solves a task from scratch.
pub fn solve_task(task_id: &str, seed: u64) -> Result<SolverPlan, super::EnvError> {
    Ok(solve(&super::reset(task_id, seed)?))
}

fn field_key(core: &super::EpisodeCore, id: ElementId) -> String {
    core.element(id).and_then(|e| e.dom_id.clone()).unwrap_or_default()
}
