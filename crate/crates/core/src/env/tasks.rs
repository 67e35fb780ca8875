//! The bundled task templates: page generation, per-task click/submit logic,
//! and the catalog metadata.
//!
//! Failure semantics per template:
//! - `click-test`, `click-button`, `click-collapsible`: no failing click; the
//!   episode only ends in success or truncation.
//! - `click-dialog-2`: clicking any of the three dialog buttons terminates;
//!   only the instructed one succeeds.
//! - `click-checkboxes-transfer`, `enter-text`, `login-user`: submitting
//!   judges the episode; a wrong state at submit fails it.
//! - `click-tab-2-easy`, `navigate-tree`: clicking a non-target link fails;
//!   tab headers and folders are always safe.
//! - `guess-number`: wrong submissions never terminate; the info map and the
//!   feedback element carry a higher/lower hint.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::words;
use super::{EpisodeCore, FunctionCount, TaskMetadata};
use crate::dom::{DomElement, ElementId};

pub(crate) fn catalog() -> Vec<TaskMetadata> {
    let meta = |task_id: &str, cat, incorrect, hidden| TaskMetadata {
        task_id: task_id.to_string(),
        num_functions_category: cat,
        incorrect_answers_present: incorrect,
        target_not_in_initial_dom: hidden,
    };
    vec![
        meta("click-test", FunctionCount::One, false, false),
        meta("click-button", FunctionCount::One, false, true),
        meta("click-dialog-2", FunctionCount::One, true, false),
        meta("click-checkboxes-transfer", FunctionCount::Variable, true, false),
        meta("click-tab-2-easy", FunctionCount::Two, true, false),
        meta("click-collapsible", FunctionCount::Two, false, false),
        meta("enter-text", FunctionCount::ThreeToSix, false, false),
        meta("login-user", FunctionCount::ThreeToSix, false, false),
        meta("guess-number", FunctionCount::Variable, false, false),
        meta("navigate-tree", FunctionCount::Variable, true, true),
    ]
}

/// Per-task state driving DOM mutation and scoring.
#[derive(Debug, Clone)]
pub(crate) enum TaskLogic {
    ClickTest {
        button: ElementId,
    },
    ClickButton {
        more: ElementId,
        target: DomElement,
        revealed: bool,
    },
    ClickDialog2 {
        buttons: Vec<ElementId>,
        target: ElementId,
    },
    ClickCheckboxes {
        boxes: Vec<ElementId>,
        required: BTreeSet<ElementId>,
        submit: ElementId,
    },
    ClickTab2Easy {
        tabs: Vec<ElementId>,
        tab_links: Vec<Vec<ElementId>>,
        target: ElementId,
    },
    ClickCollapsible {
        header: ElementId,
        section: Vec<ElementId>,
        expanded: bool,
    },
    EnterText {
        field: ElementId,
        submit: ElementId,
        expected: String,
    },
    LoginUser {
        username_field: ElementId,
        password_field: ElementId,
        submit: ElementId,
        username: String,
        password: String,
    },
    GuessNumber {
        field: ElementId,
        submit: ElementId,
        feedback: ElementId,
        target: i64,
    },
    NavigateTree {
        nodes: Vec<TreeNode>,
        target: ElementId,
        expanded: BTreeSet<ElementId>,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct TreeNode {
    pub(crate) element: DomElement,
    pub(crate) parent: Option<ElementId>,
    pub(crate) is_folder: bool,
}

type Info = BTreeMap<String, String>;

impl TaskLogic {
    /// Task-specific reaction to a click on a visible element. Generic
    /// effects (focus, checkbox toggles, the interaction log) have already
    /// been applied by the caller.
    pub(crate) fn on_click(&mut self, core: &mut EpisodeCore, id: ElementId, info: &mut Info) {
        match self {
            TaskLogic::ClickTest { button } => {
                if id == *button {
                    core.succeed();
                }
            }
            TaskLogic::ClickButton { more, target, revealed } => {
                if id == *more && !*revealed {
                    *revealed = true;
                    core.show_element(target.clone());
                } else if *revealed && id == target.element_id {
                    core.succeed();
                }
            }
            TaskLogic::ClickDialog2 { buttons, target } => {
                if buttons.contains(&id) {
                    if id == *target {
                        core.succeed();
                    } else {
                        core.fail();
                    }
                }
            }
            TaskLogic::ClickCheckboxes { boxes, required, submit } => {
                if id == *submit {
                    let checked: BTreeSet<ElementId> = boxes
                        .iter()
                        .copied()
                        .filter(|b| core.element(*b).and_then(|e| e.checked).unwrap_or(false))
                        .collect();
                    if checked == *required {
                        core.succeed();
                    } else {
                        core.fail();
                    }
                }
            }
            TaskLogic::ClickTab2Easy { tabs, tab_links, target } => {
                if let Some(active) = tabs.iter().position(|t| *t == id) {
                    for (tab, links) in tab_links.iter().enumerate() {
                        for link in links {
                            core.set_visible(*link, tab == active);
                        }
                    }
                } else if tab_links.iter().flatten().any(|l| *l == id) {
                    if id == *target {
                        core.succeed();
                    } else {
                        core.fail();
                    }
                }
            }
            TaskLogic::ClickCollapsible { header, section, expanded } => {
                if id == *header {
                    *expanded = !*expanded;
                    let show = *expanded;
                    for member in section.iter() {
                        core.set_visible(*member, show);
                    }
                } else if section.contains(&id)
                    && core.element(id).is_some_and(|e| e.tag == "button")
                {
                    core.succeed();
                }
            }
            TaskLogic::EnterText { submit, .. }
            | TaskLogic::LoginUser { submit, .. }
            | TaskLogic::GuessNumber { submit, .. } => {
                if id == *submit {
                    self.on_submit(core, info);
                }
            }
            TaskLogic::NavigateTree { nodes, target, expanded } => {
                let Some(node) = nodes.iter().find(|n| n.element.element_id == id) else {
                    return;
                };
                if node.is_folder {
                    if !expanded.remove(&id) {
                        expanded.insert(id);
                    }
                    rebuild_tree(core, nodes, expanded);
                } else if node.element.tag == "a" {
                    if id == *target {
                        core.succeed();
                    } else {
                        core.fail();
                    }
                }
            }
        }
    }

    /// Form submission, reached by clicking the submit button or by entering
    /// text that ends with a newline.
    pub(crate) fn on_submit(&mut self, core: &mut EpisodeCore, info: &mut Info) {
        match self {
            TaskLogic::EnterText { field, expected, .. } => {
                if core.element_text(*field) == *expected {
                    core.succeed();
                } else {
                    core.fail();
                }
            }
            TaskLogic::LoginUser { username_field, password_field, username, password, .. } => {
                if core.element_text(*username_field) == *username
                    && core.element_text(*password_field) == *password
                {
                    core.succeed();
                } else {
                    core.fail();
                }
            }
            TaskLogic::GuessNumber { field, feedback, target, .. } => {
                match core.element_text(*field).trim().parse::<i64>() {
                    Ok(guess) if guess == *target => core.succeed(),
                    Ok(guess) => {
                        let hint = if *target > guess { "higher" } else { "lower" };
                        info.insert("hint".to_string(), hint.to_string());
                        if let Some(e) = core.element_mut(*feedback) {
                            e.text = Some(format!("The number is {hint}."));
                        }
                    }
                    Err(_) => {
                        info.insert("error".to_string(), "not a number".to_string());
                    }
                }
            }
            _ => {}
        }
    }
}

/// Recomputes the visible element list of a tree page: a node is shown when
/// all of its ancestors are expanded folders.
fn rebuild_tree(core: &mut EpisodeCore, nodes: &[TreeNode], expanded: &BTreeSet<ElementId>) {
    let mut shown: BTreeSet<ElementId> = BTreeSet::new();
    // Nodes are stored in document order, so parents precede children.
    for node in nodes {
        let visible = match node.parent {
            None => true,
            Some(parent) => shown.contains(&parent) && expanded.contains(&parent),
        };
        if visible {
            shown.insert(node.element.element_id);
        }
    }
    core.elements = nodes
        .iter()
        .filter(|n| shown.contains(&n.element.element_id))
        .map(|n| n.element.clone())
        .collect();
}

/// Sequentially numbered element factory for page construction.
struct Page {
    elements: Vec<DomElement>,
    next_id: ElementId,
    next_order: u32,
}

impl Page {
    fn new() -> Self {
        Self { elements: Vec::new(), next_id: 1, next_order: 0 }
    }

    /// Creates the next element without adding it to the page.
    fn make(&mut self, tag: &str) -> DomElement {
        let element = DomElement::new(self.next_id, self.next_order, tag);
        self.next_id += 1;
        self.next_order += 1;
        element
    }

    fn push(&mut self, element: DomElement) -> ElementId {
        let id = element.element_id;
        self.elements.push(element);
        id
    }

    fn add(&mut self, tag: &str) -> ElementId {
        let element = self.make(tag);
        self.push(element)
    }
}

fn task_rng(task_id: &str, seed: u64) -> ChaCha8Rng {
    // FNV-1a over the task id, mixed with the episode seed.
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in task_id.bytes() {
        hash ^= u64::from(byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    ChaCha8Rng::seed_from_u64(hash ^ seed)
}

pub(crate) fn build(task_id: &str, seed: u64) -> Option<(EpisodeCore, TaskLogic)> {
    let mut rng = task_rng(task_id, seed);
    let built = match task_id {
        "click-test" => click_test(seed),
        "click-button" => click_button(seed, &mut rng),
        "click-dialog-2" => click_dialog_2(seed, &mut rng),
        "click-checkboxes-transfer" => click_checkboxes_transfer(seed, &mut rng),
        "click-tab-2-easy" => click_tab_2_easy(seed, &mut rng),
        "click-collapsible" => click_collapsible(seed, &mut rng),
        "enter-text" => enter_text(seed, &mut rng),
        "login-user" => login_user(seed, &mut rng),
        "guess-number" => guess_number(seed, &mut rng),
        "navigate-tree" => navigate_tree(seed, &mut rng),
        _ => return None,
    };
    Some(built)
}

fn click_test(seed: u64) -> (EpisodeCore, TaskLogic) {
    let mut page = Page::new();
    page.add("div");
    let button = page.make("button").with_dom_id("subbtn").with_text("ONE");
    let button = page.push(button);
    let core = EpisodeCore::new("click-test", seed, "Click the button.".to_string(), page.elements);
    (core, TaskLogic::ClickTest { button })
}

fn click_button(seed: u64, rng: &mut ChaCha8Rng) -> (EpisodeCore, TaskLogic) {
    let label = words::pick(rng);
    let mut page = Page::new();
    page.add("div");
    let blurb = page.make("p").with_text("Additional options are hidden.");
    page.push(blurb);
    let more = page.make("button").with_dom_id("more").with_text("More options");
    let more = page.push(more);
    // Created last so its ids continue the sequence, but kept out of the page
    // until the reveal.
    let target = page.make("button").with_dom_id("subbtn").with_text(label);
    let instruction = format!("Click on the \"{label}\" button.");
    let core = EpisodeCore::new("click-button", seed, instruction, page.elements);
    (core, TaskLogic::ClickButton { more, target, revealed: false })
}

fn click_dialog_2(seed: u64, rng: &mut ChaCha8Rng) -> (EpisodeCore, TaskLogic) {
    const LABELS: [&str; 3] = ["x", "Cancel", "OK"];
    let target_label = LABELS[rng.gen_range(0..LABELS.len())];
    let mut page = Page::new();
    let dialog = page.make("div").with_dom_id("dialog");
    page.push(dialog);
    let message = page.make("p").with_text("A dialog window.");
    page.push(message);
    let mut buttons = Vec::new();
    let mut target = 0;
    for label in LABELS {
        let button = page.make("button").with_text(label);
        let id = page.push(button);
        if label == target_label {
            target = id;
        }
        buttons.push(id);
    }
    let instruction = if target_label == "x" {
        "Close the dialog by clicking the \"x\" button.".to_string()
    } else {
        format!("Click the button in the dialog labeled \"{target_label}\".")
    };
    let core = EpisodeCore::new("click-dialog-2", seed, instruction, page.elements);
    (core, TaskLogic::ClickDialog2 { buttons, target })
}

fn click_checkboxes_transfer(seed: u64, rng: &mut ChaCha8Rng) -> (EpisodeCore, TaskLogic) {
    let count = rng.gen_range(3..=5);
    let labels = words::pick_distinct(rng, count);
    let wanted = rng.gen_range(1..=count);
    let mut indices: Vec<usize> = (0..count).collect();
    indices.shuffle(rng);
    let required_indices: BTreeSet<usize> = indices.into_iter().take(wanted).collect();

    let mut page = Page::new();
    let area = page.make("div").with_dom_id("area");
    page.push(area);
    let mut boxes = Vec::new();
    let mut required = BTreeSet::new();
    let mut required_labels = Vec::new();
    for (i, label) in labels.iter().enumerate() {
        let prechecked = rng.gen_bool(0.4);
        let one = page.make("input_checkbox").with_text(label).with_checked(prechecked);
        let id = page.push(one);
        if required_indices.contains(&i) {
            required.insert(id);
            required_labels.push(*label);
        }
        boxes.push(id);
    }
    let submit = page.make("button").with_dom_id("subbtn").with_text("Submit");
    let submit = page.push(submit);
    let instruction = format!("Select {} and click Submit.", required_labels.join(", "));
    let core = EpisodeCore::new("click-checkboxes-transfer", seed, instruction, page.elements);
    (core, TaskLogic::ClickCheckboxes { boxes, required, submit })
}

fn click_tab_2_easy(seed: u64, rng: &mut ChaCha8Rng) -> (EpisodeCore, TaskLogic) {
    let link_counts = [1, rng.gen_range(1..=2), rng.gen_range(1..=2)];
    let total: usize = link_counts.iter().sum();
    let link_words = words::pick_distinct(rng, total);

    let mut page = Page::new();
    let bar = page.make("ul").with_dom_id("tabbar");
    page.push(bar);
    let mut tabs = Vec::new();
    for i in 1..=3 {
        let tab = page.make("a").with_dom_id(&format!("tab-{i}")).with_text(&format!("Tab #{i}"));
        tabs.push(page.push(tab));
    }
    let mut tab_links: Vec<Vec<ElementId>> = Vec::new();
    let mut word_iter = link_words.iter();
    for (tab, count) in link_counts.iter().enumerate() {
        let mut links = Vec::new();
        for _ in 0..*count {
            let word = word_iter.next().expect("enough words");
            let mut link = page.make("a").with_text(word);
            if tab != 0 {
                link = link.hidden();
            }
            links.push(page.push(link));
        }
        tab_links.push(links);
    }
    // The target always lives behind a non-initial tab.
    let target_tab = rng.gen_range(1..=2);
    let choices = &tab_links[target_tab];
    let target = choices[rng.gen_range(0..choices.len())];
    let target_word = page
        .elements
        .iter()
        .find(|e| e.element_id == target)
        .and_then(|e| e.text.clone())
        .expect("target has text");
    let instruction =
        format!("Switch between the tabs to find and click on the link \"{target_word}\".");
    let core = EpisodeCore::new("click-tab-2-easy", seed, instruction, page.elements);
    (core, TaskLogic::ClickTab2Easy { tabs, tab_links, target })
}

fn click_collapsible(seed: u64, rng: &mut ChaCha8Rng) -> (EpisodeCore, TaskLogic) {
    let filler = words::pick(rng);
    let mut page = Page::new();
    let area = page.make("div").with_dom_id("area");
    page.push(area);
    let header = page.make("h3").with_dom_id("section-header").with_text("Section #1");
    let header = page.push(header);
    let body = page.make("p").with_text(&format!("Notes about {filler}.")).hidden();
    let body = page.push(body);
    let submit = page.make("button").with_dom_id("subbtn").with_text("Submit").hidden();
    let submit = page.push(submit);
    let core = EpisodeCore::new(
        "click-collapsible",
        seed,
        "Expand the section below and click submit.".to_string(),
        page.elements,
    );
    (core, TaskLogic::ClickCollapsible { header, section: vec![body, submit], expanded: false })
}

fn enter_text(seed: u64, rng: &mut ChaCha8Rng) -> (EpisodeCore, TaskLogic) {
    let word = words::pick(rng);
    let mut page = Page::new();
    let form = page.make("div").with_dom_id("form");
    page.push(form);
    let field = page.make("input_text").with_dom_id("answer").focusable();
    let field = page.push(field);
    let submit = page.make("button").with_dom_id("subbtn").with_text("Submit");
    let submit = page.push(submit);
    let instruction = format!("Enter \"{word}\" into the text field and press Submit.");
    let core = EpisodeCore::new("enter-text", seed, instruction, page.elements);
    (core, TaskLogic::EnterText { field, submit, expected: word.to_string() })
}

fn login_user(seed: u64, rng: &mut ChaCha8Rng) -> (EpisodeCore, TaskLogic) {
    let picked = words::pick_distinct(rng, 2);
    let (username, password) = (picked[0], picked[1]);
    let mut page = Page::new();
    let form = page.make("div").with_dom_id("form");
    page.push(form);
    let user_label = page.make("label").with_text("Username");
    page.push(user_label);
    let username_field = page.make("input_text").with_dom_id("username").focusable();
    let username_field = page.push(username_field);
    let pass_label = page.make("label").with_text("Password");
    page.push(pass_label);
    let password_field = page.make("input_password").with_dom_id("password").focusable();
    let password_field = page.push(password_field);
    let submit = page.make("button").with_dom_id("subbtn").with_text("Login");
    let submit = page.push(submit);
    let instruction = format!(
        "Enter the username \"{username}\" and the password \"{password}\" into the text fields and press login."
    );
    let core = EpisodeCore::new("login-user", seed, instruction, page.elements);
    (core, TaskLogic::LoginUser {
        username_field,
        password_field,
        submit,
        username: username.to_string(),
        password: password.to_string(),
    })
}

fn guess_number(seed: u64, rng: &mut ChaCha8Rng) -> (EpisodeCore, TaskLogic) {
    let target = rng.gen_range(0..=9);
    let mut page = Page::new();
    let form = page.make("div").with_dom_id("form");
    page.push(form);
    let feedback = page.make("p").with_dom_id("feedback");
    let feedback = page.push(feedback);
    let field = page.make("input_number").with_dom_id("guess").focusable();
    let field = page.push(field);
    let submit = page.make("button").with_dom_id("subbtn").with_text("Submit");
    let submit = page.push(submit);
    let core = EpisodeCore::new(
        "guess-number",
        seed,
        "Guess the number between 0 and 9 and press Submit. Use the feedback to find the right number."
            .to_string(),
        page.elements,
    );
    (core, TaskLogic::GuessNumber { field, submit, feedback, target })
}

fn add_folder(
    page: &mut Page,
    nodes: &mut Vec<TreeNode>,
    name: &str,
    parent: Option<ElementId>,
) -> ElementId {
    let element = page.make("li").with_class("folder").with_text(name);
    let id = element.element_id;
    nodes.push(TreeNode { element, parent, is_folder: true });
    id
}

fn add_leaf(
    page: &mut Page,
    nodes: &mut Vec<TreeNode>,
    leaves: &mut Vec<ElementId>,
    name: &str,
    parent: ElementId,
) {
    let element = page.make("a").with_text(name);
    let id = element.element_id;
    nodes.push(TreeNode { element, parent: Some(parent), is_folder: false });
    leaves.push(id);
}

fn navigate_tree(seed: u64, rng: &mut ChaCha8Rng) -> (EpisodeCore, TaskLogic) {
    // Two root folders; one holds a subfolder with two leaves plus a sibling
    // leaf, the other two plain leaves. Targets are always nested, so the
    // initial DOM never contains them.
    let names = words::pick_distinct(rng, 8);
    let deep_root = rng.gen_range(0..2usize);

    let mut page = Page::new();
    let mut nodes: Vec<TreeNode> = Vec::new();
    let mut leaves: Vec<ElementId> = Vec::new();

    let wrapper = page.make("ul").with_dom_id("tree");
    nodes.push(TreeNode { element: wrapper, parent: None, is_folder: false });

    let mut name_iter = names.into_iter();
    let mut next_name = move || name_iter.next().expect("enough names");
    for root_index in 0..2 {
        let root = add_folder(&mut page, &mut nodes, next_name(), None);
        if root_index == deep_root {
            let sub = add_folder(&mut page, &mut nodes, next_name(), Some(root));
            add_leaf(&mut page, &mut nodes, &mut leaves, next_name(), sub);
            add_leaf(&mut page, &mut nodes, &mut leaves, next_name(), sub);
            add_leaf(&mut page, &mut nodes, &mut leaves, next_name(), root);
        } else {
            add_leaf(&mut page, &mut nodes, &mut leaves, next_name(), root);
            add_leaf(&mut page, &mut nodes, &mut leaves, next_name(), root);
        }
    }

    let target = leaves[rng.gen_range(0..leaves.len())];
    let target_name = nodes
        .iter()
        .find(|n| n.element.element_id == target)
        .and_then(|n| n.element.text.clone())
        .expect("target has a name");
    let instruction =
        format!("Navigate through the file tree. Find and click on the link \"{target_name}\".");
    let mut core = EpisodeCore::new("navigate-tree", seed, instruction, Vec::new());
    rebuild_tree(&mut core, &nodes, &BTreeSet::new());
    (core, TaskLogic::NavigateTree { nodes, target, expanded: BTreeSet::new() })
}
