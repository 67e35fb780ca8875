//! The three primitive action constructors: click, enter text, scroll.
//!
//! Each constructor resolves its arguments against an observation and returns
//! an [`Action`] for the environment to execute. Resolution is a pure query:
//! it never mutates the observation, and identical inputs resolve to the same
//! action.

use thiserror::Error;

use crate::dom::{DomElement, ElementId, Observation};

/// A resolved primitive action.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Action {
    Click { element_id: ElementId },
    EnterText { text: String },
    Scroll { element_id: ElementId },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ActionError {
    /// Diagnostic string kept exactly as the API surface documents it.
    #[error("Cannot find in the DOM_element")]
    ElementNotFound,
    #[error("no focused text element; click a text field first")]
    NoFocusedElement,
}

fn text_eq(lhs: Option<&String>, rhs: &str) -> bool {
    lhs.is_some_and(|v| v.eq_ignore_ascii_case(rhs))
}

/// Resolves a click on the first visible element (document order) whose tag
/// or class equals `tag_class_name` and whose id or text equals
/// `id_text_name`, both case-insensitively.
pub fn click_action(
    tag_class_name: &str,
    id_text_name: &str,
    obs: &Observation,
) -> Result<Action, ActionError> {
    let matches = |e: &&DomElement| {
        e.visible
            && (e.tag.eq_ignore_ascii_case(tag_class_name)
                || e.class.as_ref().is_some_and(|c| c.eq_ignore_ascii_case(tag_class_name)))
            && (text_eq(e.dom_id.as_ref(), id_text_name) || text_eq(e.text.as_ref(), id_text_name))
    };
    obs.elements
        .iter()
        .find(matches)
        .map(|e| Action::Click { element_id: e.element_id })
        .ok_or(ActionError::ElementNotFound)
}

/// Binds a text entry to the currently focused text-accepting element. Text
/// ending in `"\n"` additionally submits the enclosing form when stepped.
pub fn enter_text_action(
    input_text: &str,
    obs: &Observation,
    focused: Option<ElementId>,
) -> Result<Action, ActionError> {
    let focused = focused.ok_or(ActionError::NoFocusedElement)?;
    let ok = obs.elements.iter().any(|e| e.element_id == focused && e.focusable);
    if !ok {
        return Err(ActionError::NoFocusedElement);
    }
    Ok(Action::EnterText { text: input_text.to_string() })
}

/// Resolves a scroll to the first element, visible or not, whose text equals
/// `text_to_scroll_to` case-insensitively. Stepping the action makes that
/// element visible.
pub fn scroll_action(text_to_scroll_to: &str, obs: &Observation) -> Result<Action, ActionError> {
    obs.elements
        .iter()
        .find(|e| text_eq(e.text.as_ref(), text_to_scroll_to))
        .map(|e| Action::Scroll { element_id: e.element_id })
        .ok_or(ActionError::ElementNotFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dom::DomElement;

    fn obs(elements: Vec<DomElement>) -> Observation {
        Observation::new(elements)
    }

    #[test]
    fn click_resolves_by_tag_and_text() {
        let o = obs(vec![DomElement::new(1, 0, "button").with_text("ONE")]);
        assert_eq!(click_action("button", "ONE", &o), Ok(Action::Click { element_id: 1 }));
        // Case-insensitive on both arguments.
        assert_eq!(click_action("Button", "one", &o), Ok(Action::Click { element_id: 1 }));
    }

    #[test]
    fn click_missing_element_reports_literal_diagnostic() {
        let o = obs(vec![DomElement::new(1, 0, "button").with_text("ONE")]);
        let err = click_action("button", "TWO", &o).unwrap_err();
        assert_eq!(err.to_string(), "Cannot find in the DOM_element");
    }

    #[test]
    fn click_prefers_smaller_doc_order() {
        let o = obs(vec![
            DomElement::new(7, 0, "button").with_text("GO"),
            DomElement::new(3, 1, "button").with_text("GO"),
        ]);
        assert_eq!(click_action("button", "GO", &o), Ok(Action::Click { element_id: 7 }));
    }

    #[test]
    fn click_ignores_invisible_elements() {
        let o = obs(vec![
            DomElement::new(1, 0, "button").with_text("GO").hidden(),
            DomElement::new(2, 1, "button").with_text("GO"),
        ]);
        assert_eq!(click_action("button", "GO", &o), Ok(Action::Click { element_id: 2 }));
    }

    #[test]
    fn click_resolves_by_class_and_dom_id() {
        let o = obs(vec![DomElement::new(4, 0, "li").with_class("folder").with_dom_id("f1")]);
        assert_eq!(click_action("folder", "f1", &o), Ok(Action::Click { element_id: 4 }));
    }

    #[test]
    fn enter_text_requires_focus() {
        let o = obs(vec![DomElement::new(1, 0, "input_text").focusable()]);
        assert_eq!(
            enter_text_action("Hello", &o, Some(1)),
            Ok(Action::EnterText { text: "Hello".into() })
        );
        assert_eq!(enter_text_action("Hello", &o, None), Err(ActionError::NoFocusedElement));
        // A focused id that is not a text element does not accept text.
        let o2 = obs(vec![DomElement::new(1, 0, "button").with_text("GO")]);
        assert_eq!(enter_text_action("Hello", &o2, Some(1)), Err(ActionError::NoFocusedElement));
    }

    #[test]
    fn enter_text_keeps_trailing_newline() {
        let o = obs(vec![DomElement::new(1, 0, "input_text").focusable()]);
        let action = enter_text_action("ls -la\n", &o, Some(1)).unwrap();
        assert_eq!(action, Action::EnterText { text: "ls -la\n".into() });
    }

    #[test]
    fn scroll_resolves_regardless_of_visibility() {
        let o = obs(vec![DomElement::new(1, 0, "button").with_text("Apple").hidden()]);
        assert_eq!(scroll_action("Apple", &o), Ok(Action::Scroll { element_id: 1 }));
        assert_eq!(scroll_action("apple", &o), Ok(Action::Scroll { element_id: 1 }));
        assert_eq!(scroll_action("Pear", &o), Err(ActionError::ElementNotFound));
    }

    #[test]
    fn resolution_is_pure_and_deterministic() {
        let o = obs(vec![
            DomElement::new(1, 0, "button").with_text("A"),
            DomElement::new(2, 1, "button").with_text("B"),
        ]);
        let before = o.clone();
        let first = click_action("button", "B", &o);
        let second = click_action("button", "B", &o);
        assert_eq!(first, second);
        assert_eq!(o, before);
    }
}
