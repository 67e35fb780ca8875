//! DOM element model, tag/class whitelist filtering, and prompt-text
//! serialization of observations.
//!
//! The default whitelist ships as an embedded data asset
//! (`assets/dom_whitelist.txt`) and is parsed once at first use.

use std::collections::BTreeSet;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

/// Identifier of an element, unique within one episode.
pub type ElementId = u32;

/// Tags whose elements accept text entry (and may therefore be focusable).
pub const TEXT_ACCEPTING_TAGS: [&str; 6] = [
    "input_text",
    "input_password",
    "input_number",
    "input_date",
    "input_time",
    "textarea",
];

/// One element of a page, the unit of observation and interaction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DomElement {
    pub element_id: ElementId,
    /// Lowercase tag token, e.g. "button" or "input_text".
    pub tag: String,
    /// Optional lowercase class token, e.g. "folder".
    pub class: Option<String>,
    /// Page-assigned id attribute, if any.
    pub dom_id: Option<String>,
    /// Visible text content, if any.
    pub text: Option<String>,
    /// Whether the element is currently in the viewport.
    pub visible: bool,
    /// Whether the element accepts text entry when focused.
    pub focusable: bool,
    /// Checkbox/radio state; `None` for everything else.
    pub checked: Option<bool>,
    /// Position in document order, strictly increasing within a page.
    pub doc_order: u32,
}

impl DomElement {
    /// Creates a visible element. Tags are lowercased at ingestion so that
    /// whitelist matching is case-insensitive.
    pub fn new(element_id: ElementId, doc_order: u32, tag: &str) -> Self {
        Self {
            element_id,
            tag: tag.to_ascii_lowercase(),
            class: None,
            dom_id: None,
            text: None,
            visible: true,
            focusable: false,
            checked: None,
            doc_order,
        }
    }

    pub fn with_class(mut self, class: &str) -> Self {
        self.class = Some(class.to_ascii_lowercase());
        self
    }

    pub fn with_dom_id(mut self, dom_id: &str) -> Self {
        self.dom_id = Some(dom_id.to_string());
        self
    }

    pub fn with_text(mut self, text: &str) -> Self {
        self.text = Some(text.to_string());
        self
    }

    pub fn with_checked(mut self, checked: bool) -> Self {
        self.checked = Some(checked);
        self
    }

    pub fn hidden(mut self) -> Self {
        self.visible = false;
        self
    }

    /// Marks the element as accepting text entry. Only meaningful for tags in
    /// [`TEXT_ACCEPTING_TAGS`]; the constructor helpers keep that invariant.
    pub fn focusable(mut self) -> Self {
        debug_assert!(TEXT_ACCEPTING_TAGS.contains(&self.tag.as_str()));
        self.focusable = true;
        self
    }
}

/// Page state as the agent sees it: the element list plus the set of element
/// ids clicked on or text-modified so far this episode.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Observation {
    pub elements: Vec<DomElement>,
    pub interaction_log: BTreeSet<ElementId>,
}

impl Observation {
    pub fn new(elements: Vec<DomElement>) -> Self {
        Self { elements, interaction_log: BTreeSet::new() }
    }
}

/// Raw text of the published whitelist listing; kept verbatim as data.
pub const DOM_WHITELIST_LISTING: &str = include_str!("../assets/dom_whitelist.txt");

static DEFAULT_WHITELIST: LazyLock<(BTreeSet<String>, BTreeSet<String>)> = LazyLock::new(|| {
    let mut tags = BTreeSet::new();
    let mut classes = BTreeSet::new();
    for line in DOM_WHITELIST_LISTING.lines() {
        let into = if line.starts_with("useful_tag") {
            &mut tags
        } else if line.starts_with("useful_classes") {
            &mut classes
        } else {
            continue;
        };
        into.extend(quoted_tokens(line));
    }
    (tags, classes)
});

/// Extracts the `'...'`-quoted tokens of one listing line.
fn quoted_tokens(line: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = line;
    while let Some(start) = rest.find('\'') {
        let tail = &rest[start + 1..];
        match tail.find('\'') {
            Some(end) => {
                out.push(tail[..end].to_ascii_lowercase());
                rest = &tail[end + 1..];
            }
            None => break,
        }
    }
    out
}

/// Which elements survive filtering, and whether document order is preserved.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub useful_tags: BTreeSet<String>,
    pub useful_classes: BTreeSet<String>,
    /// `true` keeps document order; `false` groups the output by tag,
    /// reproducing the order-losing behavior of the original filter.
    pub preserve_order: bool,
}

impl Default for FilterConfig {
    fn default() -> Self {
        let (tags, classes) = DEFAULT_WHITELIST.clone();
        Self { useful_tags: tags, useful_classes: classes, preserve_order: true }
    }
}

impl FilterConfig {
    pub fn retains(&self, element: &DomElement) -> bool {
        self.useful_tags.contains(&element.tag)
            || element.class.as_ref().is_some_and(|c| self.useful_classes.contains(c))
    }
}

/// The filtered subset of an observation plus the parallel interaction flags.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilteredObservation {
    pub elements: Vec<DomElement>,
    /// `flags[i] == 1` iff `elements[i]` has been clicked on or modified.
    pub flags: Vec<u8>,
}

/// Returns the elements whose tag or class is whitelisted, with one binary
/// flag per retained element marking whether it was interacted with.
pub fn filter_dom(obs: &Observation, cfg: &FilterConfig) -> FilteredObservation {
    let mut elements: Vec<DomElement> =
        obs.elements.iter().filter(|e| cfg.retains(e)).cloned().collect();
    if !cfg.preserve_order {
        // Group by tag (alphabetical), class-only matches after, stable within
        // a group.
        elements.sort_by(|a, b| {
            let ka = group_key(a, cfg);
            let kb = group_key(b, cfg);
            ka.cmp(&kb).then(a.doc_order.cmp(&b.doc_order))
        });
    }
    let flags = elements
        .iter()
        .map(|e| u8::from(obs.interaction_log.contains(&e.element_id)))
        .collect();
    FilteredObservation { elements, flags }
}

fn group_key<'a>(e: &'a DomElement, cfg: &FilterConfig) -> (u8, &'a str) {
    if cfg.useful_tags.contains(&e.tag) {
        (0, e.tag.as_str())
    } else {
        (1, e.class.as_deref().unwrap_or(""))
    }
}

fn element_line(e: &DomElement) -> String {
    let mut line = e.tag.clone();
    if let Some(class) = &e.class {
        line.push_str(&format!(" [{class}]"));
    }
    if let Some(id) = &e.dom_id {
        line.push_str(&format!(" [id={id}]"));
    }
    if let Some(text) = &e.text {
        line.push_str(&format!(" [text={text}]"));
    }
    if let Some(checked) = e.checked {
        line.push_str(&format!(" [checked={checked}]"));
    }
    if !e.visible {
        line.push_str(" [hidden]");
    }
    line
}

/// Renders a filtered observation one element per line, optionally followed
/// by the flags array. Byte-identical output for identical input.
pub fn serialize_observation(fobs: &FilteredObservation, include_flags: bool) -> String {
    let mut out = fobs.elements.iter().map(element_line).collect::<Vec<_>>().join("\n");
    if include_flags {
        if !out.is_empty() {
            out.push('\n');
        }
        let flags = fobs.flags.iter().map(u8::to_string).collect::<Vec<_>>().join(",");
        out.push_str(&format!("flags: [{flags}]"));
    }
    out
}

/// Renders every element of an observation, whitelisted or not, in the same
/// per-line format.
pub fn serialize_whole_dom(obs: &Observation) -> String {
    obs.elements.iter().map(element_line).collect::<Vec<_>>().join("\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(elements: Vec<DomElement>) -> Observation {
        Observation::new(elements)
    }

    #[test]
    fn default_whitelist_matches_published_listing() {
        let cfg = FilterConfig::default();
        for tag in [
            "button", "text", "input_time", "textarea", "polygon", "label", "input_password",
            "rect", "tt", "circle", "span", "input_text", "input_number", "input_date",
            "input_radio", "tspan", "input_checkbox", "t", "h3", "ul", "a", "p", "div", "th",
            "tr", "td",
        ] {
            assert!(cfg.useful_tags.contains(tag), "missing tag {tag}");
        }
        // 26 distinct tags; the listing repeats 'button' and 'input_password'.
        assert_eq!(cfg.useful_tags.len(), 26);
        assert_eq!(cfg.useful_classes.len(), 1);
        assert!(cfg.useful_classes.contains("folder"));
    }

    #[test]
    fn retains_button_drops_script() {
        let cfg = FilterConfig::default();
        let o = obs(vec![
            DomElement::new(1, 0, "button").with_text("ONE"),
            DomElement::new(2, 1, "script"),
        ]);
        let f = filter_dom(&o, &cfg);
        assert_eq!(f.elements.len(), 1);
        assert_eq!(f.elements[0].tag, "button");
    }

    #[test]
    fn class_match_retains_nonwhitelisted_tag() {
        let cfg = FilterConfig::default();
        let o = obs(vec![DomElement::new(1, 0, "li").with_class("folder")]);
        let f = filter_dom(&o, &cfg);
        assert_eq!(f.elements.len(), 1);
    }

    #[test]
    fn empty_observation_filters_to_empty() {
        let f = filter_dom(&obs(vec![]), &FilterConfig::default());
        assert!(f.elements.is_empty());
        assert!(f.flags.is_empty());
    }

    #[test]
    fn interacted_element_gets_flag_one() {
        let cfg = FilterConfig::default();
        let mut o = obs(vec![
            DomElement::new(1, 0, "button").with_text("A"),
            DomElement::new(2, 1, "button").with_text("B"),
        ]);
        o.interaction_log.insert(2);
        let f = filter_dom(&o, &cfg);
        assert_eq!(f.flags, vec![0, 1]);
    }

    #[test]
    fn grouped_mode_orders_by_tag() {
        let cfg = FilterConfig { preserve_order: false, ..FilterConfig::default() };
        let o = obs(vec![
            DomElement::new(1, 0, "p").with_text("x"),
            DomElement::new(2, 1, "button").with_text("y"),
            DomElement::new(3, 2, "p").with_text("z"),
        ]);
        let f = filter_dom(&o, &cfg);
        let tags: Vec<&str> = f.elements.iter().map(|e| e.tag.as_str()).collect();
        assert_eq!(tags, vec!["button", "p", "p"]);
        assert_eq!(f.elements[1].element_id, 1);
        assert_eq!(f.elements[2].element_id, 3);
    }

    #[test]
    fn filter_is_idempotent() {
        let cfg = FilterConfig::default();
        let mut o = obs(vec![
            DomElement::new(1, 0, "button").with_text("A"),
            DomElement::new(2, 1, "script"),
            DomElement::new(3, 2, "li").with_class("folder"),
        ]);
        o.interaction_log.insert(1);
        let first = filter_dom(&o, &cfg);
        let again = filter_dom(
            &Observation { elements: first.elements.clone(), interaction_log: o.interaction_log },
            &cfg,
        );
        assert_eq!(first, again);
    }

    #[test]
    fn serialization_examples() {
        let o = obs(vec![DomElement::new(1, 0, "button").with_text("ONE")]);
        let f = filter_dom(&o, &FilterConfig::default());
        let text = serialize_observation(&f, false);
        assert_eq!(text.lines().count(), 1);
        assert!(text.contains("button") && text.contains("ONE"));

        let empty = serialize_observation(&FilteredObservation::default(), true);
        assert_eq!(empty, "flags: []");

        assert_eq!(serialize_observation(&f, true), serialize_observation(&f, true));
    }

    #[test]
    fn whole_dom_renders_everything() {
        let o = obs(vec![
            DomElement::new(1, 0, "button").with_text("A"),
            DomElement::new(2, 1, "script").with_text("junk"),
        ]);
        let whole = serialize_whole_dom(&o);
        assert_eq!(whole.lines().count(), 2);
        assert_eq!(serialize_whole_dom(&obs(vec![])), "");

        // Shared elements render identically in filtered and whole views.
        let f = filter_dom(&o, &FilterConfig::default());
        let filtered = serialize_observation(&f, false);
        for line in filtered.lines() {
            assert!(whole.lines().any(|w| w == line));
        }
    }
}
