//! Property tests: whitelist filtering against an independent membership
//! predicate, extraction totality and round-tripping, and aggregation against
//! a straight recomputation.

use std::collections::BTreeSet;

use proptest::prelude::*;

use webwise_core::agent::EpisodeResult;
use webwise_core::dom::{filter_dom, DomElement, FilterConfig, Observation};
use webwise_core::program::{extract_program, pretty_print, ActionCall, ApiFunction, GeneratedText};
use webwise_core::report::{aggregate, BenchMethod, CellOutcome};

const TAG_POOL: [&str; 10] =
    ["button", "script", "li", "span", "a", "iframe", "input_checkbox", "style", "p", "svg"];
const CLASS_POOL: [&str; 3] = ["folder", "panel", "shade"];
const TEXT_POOL: [&str; 4] = ["apple", "GO", "Section #1", "x"];

fn arb_element(id: u32) -> impl Strategy<Value = DomElement> {
    (
        proptest::sample::select(&TAG_POOL[..]),
        proptest::option::of(proptest::sample::select(&CLASS_POOL[..])),
        proptest::option::of(proptest::sample::select(&TEXT_POOL[..])),
        any::<bool>(),
        proptest::option::of(any::<bool>()),
    )
        .prop_map(move |(tag, class, text, visible, checked)| {
            let mut element = DomElement::new(id, id, tag);
            if let Some(class) = class {
                element = element.with_class(class);
            }
            if let Some(text) = text {
                element = element.with_text(text);
            }
            if let Some(checked) = checked {
                element = element.with_checked(checked);
            }
            if !visible {
                element = element.hidden();
            }
            element
        })
}

fn arb_observation() -> impl Strategy<Value = Observation> {
    prop::collection::vec(any::<bool>(), 0..25).prop_flat_map(|interactions| {
        let n = interactions.len() as u32;
        (
            (0..n.max(1)).map(arb_element).collect::<Vec<_>>(),
            Just(interactions),
        )
            .prop_map(|(elements, interactions)| {
                let elements: Vec<DomElement> =
                    elements.into_iter().take(interactions.len()).collect();
                let interaction_log: BTreeSet<u32> = elements
                    .iter()
                    .zip(&interactions)
                    .filter(|(_, hit)| **hit)
                    .map(|(e, _)| e.element_id)
                    .collect();
                Observation { elements, interaction_log }
            })
    })
}

proptest! {
    /// Soundness, completeness, flag correspondence, and order preservation
    /// of the whitelist filter, checked against a membership predicate
    /// written independently of `FilterConfig::retains`.
    #[test]
    fn filter_keeps_exactly_the_whitelisted_elements(obs in arb_observation()) {
        let cfg = FilterConfig::default();
        let filtered = filter_dom(&obs, &cfg);

        let independent = |e: &DomElement| -> bool {
            let tag_ok = cfg.useful_tags.iter().any(|t| t == &e.tag);
            let class_ok = match &e.class {
                Some(c) => cfg.useful_classes.iter().any(|k| k == c),
                None => false,
            };
            tag_ok || class_ok
        };

        let expected: Vec<u32> =
            obs.elements.iter().filter(|e| independent(e)).map(|e| e.element_id).collect();
        let got: Vec<u32> = filtered.elements.iter().map(|e| e.element_id).collect();
        prop_assert_eq!(got, expected);

        prop_assert_eq!(filtered.flags.len(), filtered.elements.len());
        for (element, flag) in filtered.elements.iter().zip(&filtered.flags) {
            let expected = u8::from(obs.interaction_log.contains(&element.element_id));
            prop_assert_eq!(*flag, expected);
        }
        for pair in filtered.elements.windows(2) {
            prop_assert!(pair[0].doc_order < pair[1].doc_order);
        }
    }

    /// Extraction is total: arbitrary bytes (lossily decoded) never panic and
    /// usability means exactly "at least one action call".
    #[test]
    fn extraction_is_total(bytes in prop::collection::vec(any::<u8>(), 0..400)) {
        let text = String::from_utf8_lossy(&bytes).to_string();
        let program = extract_program(&GeneratedText::from(text));
        prop_assert_eq!(program.usable, program.action_calls().count() > 0);
    }

    /// Pretty-printing action calls and re-extracting them is lossless.
    #[test]
    fn rendered_programs_reextract_to_the_same_calls(
        calls in prop::collection::vec(
            (
                proptest::sample::select(&[ApiFunction::Click, ApiFunction::EnterText, ApiFunction::Scroll][..]),
                prop::collection::vec(".*", 1..3),
            ),
            1..6,
        )
    ) {
        let calls: Vec<ActionCall> =
            calls.into_iter().map(|(function, args)| ActionCall { function, args }).collect();
        let program = webwise_core::program::Program {
            statements: calls.iter().cloned().map(webwise_core::program::Statement::Action).collect(),
            usable: true,
        };
        let printed = pretty_print(&program);
        let again = extract_program(&GeneratedText::from(printed));
        let round: Vec<ActionCall> = again.action_calls().cloned().collect();
        prop_assert_eq!(round, calls);
    }

    /// Aggregated rates and category means equal a direct recomputation.
    #[test]
    fn aggregation_matches_direct_recomputation(
        outcome_bits in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..40), 1..8)
    ) {
        let tasks = webwise_core::list_tasks();
        let cells: Vec<CellOutcome> = outcome_bits
            .iter()
            .enumerate()
            .map(|(i, bits)| {
                let task_id = tasks[i % tasks.len()].task_id.clone();
                let results = bits
                    .iter()
                    .map(|ok| EpisodeResult {
                        task_id: task_id.clone(),
                        seed: 0,
                        score: if *ok { 1 } else { -1 },
                        steps_taken: 0,
                        tle: false,
                        trace: Vec::new(),
                    })
                    .collect();
                CellOutcome { task_id, method: BenchMethod::WebWise, k: 0, results }
            })
            .collect();
        let report = aggregate(&cells);
        for row in &report.rows {
            let cell_bits: Vec<&Vec<bool>> = cells
                .iter()
                .enumerate()
                .filter(|(_, c)| c.task_id == row.task_id)
                .map(|(i, _)| &outcome_bits[i])
                .collect();
            // Duplicate task ids produce one row per cell; compare totals.
            let successes: usize = cell_bits.iter().map(|b| b.iter().filter(|x| **x).count()).sum();
            let episodes: usize = cell_bits.iter().map(|b| b.len()).sum();
            let rows_for_task: Vec<_> =
                report.rows.iter().filter(|r| r.task_id == row.task_id).collect();
            let row_successes: u32 = rows_for_task.iter().map(|r| r.successes).sum();
            let row_episodes: u32 = rows_for_task.iter().map(|r| r.episodes).sum();
            prop_assert_eq!(row_successes as usize, successes);
            prop_assert_eq!(row_episodes as usize, episodes);
            prop_assert!((row.success_rate - f64::from(row.successes) / f64::from(row.episodes)).abs() < 1e-12);
        }
        for category in &report.categories {
            let member_rates: Vec<f64> = report
                .rows
                .iter()
                .filter(|r| {
                    webwise_core::env::task_metadata(&r.task_id).unwrap().num_functions_category
                        == category.category
                })
                .map(|r| r.success_rate)
                .collect();
            let mean = member_rates.iter().sum::<f64>() / member_rates.len() as f64;
            prop_assert!((category.mean_rate - mean).abs() < 1e-12);
        }
    }
}
