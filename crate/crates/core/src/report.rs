//! Aggregation of episode outcomes into per-task rows and per-category means,
//! and deterministic emission as a text table, CSV, or JSON.

use std::collections::BTreeMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::agent::EpisodeResult;
use crate::env::{task_metadata, FunctionCount};

/// The five benchmarkable methods, named as on the CLI.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMethod {
    InstructionOnly,
    FilteredDom,
    WholeDom,
    #[serde(rename = "webwise")]
    WebWise,
    Acg,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 5] = [
        BenchMethod::InstructionOnly,
        BenchMethod::FilteredDom,
        BenchMethod::WholeDom,
        BenchMethod::WebWise,
        BenchMethod::Acg,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::InstructionOnly => "instruction-only",
            BenchMethod::FilteredDom => "filtered-dom",
            BenchMethod::WholeDom => "whole-dom",
            BenchMethod::WebWise => "webwise",
            BenchMethod::Acg => "acg",
        }
    }
}

impl FromStr for BenchMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        BenchMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method '{s}' (expected one of: {})", method_names()))
    }
}

fn method_names() -> String {
    BenchMethod::ALL.map(BenchMethod::name).join(", ")
}

/// Success statistics for one (task, method, k) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub task_id: String,
    pub method: BenchMethod,
    pub k: u8,
    pub episodes: u32,
    pub successes: u32,
    pub tle_count: u32,
    pub success_rate: f64,
}

/// Unweighted mean success rate over the tasks of one category, for one
/// (method, k) pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub method: BenchMethod,
    pub k: u8,
    pub category: FunctionCount,
    pub mean_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub rows: Vec<ReportRow>,
    pub categories: Vec<CategoryReport>,
}

/// Outcomes of one benchmark cell, ready for aggregation.
#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub task_id: String,
    pub method: BenchMethod,
    pub k: u8,
    pub results: Vec<EpisodeResult>,
}

/// Builds rows and category means. Rows are ordered by (method, k, task) and
/// categories by (method, k, category), so output is deterministic for any
/// input order.
pub fn aggregate(cells: &[CellOutcome]) -> Report {
    let mut rows: Vec<ReportRow> = cells
        .iter()
        .map(|cell| {
            let episodes = cell.results.len() as u32;
            let successes = cell.results.iter().filter(|r| r.score == 1).count() as u32;
            let tle_count = cell.results.iter().filter(|r| r.tle).count() as u32;
            ReportRow {
                task_id: cell.task_id.clone(),
                method: cell.method,
                k: cell.k,
                episodes,
                successes,
                tle_count,
                success_rate: if episodes == 0 {
                    0.0
                } else {
                    f64::from(successes) / f64::from(episodes)
                },
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        (a.method, a.k, &a.task_id).cmp(&(b.method, b.k, &b.task_id))
    });

    let mut grouped: BTreeMap<(BenchMethod, u8, FunctionCount), Vec<f64>> = BTreeMap::new();
    for row in &rows {
        let category = task_metadata(&row.task_id)
            .map(|m| m.num_functions_category)
            .unwrap_or(FunctionCount::Variable);
        grouped.entry((row.method, row.k, category)).or_default().push(row.success_rate);
    }
    let categories = grouped
        .into_iter()
        .map(|((method, k, category), rates)| CategoryReport {
            method,
            k,
            category,
            mean_rate: rates.iter().sum::<f64>() / rates.len() as f64,
        })
        .collect();

    Report { rows, categories }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Table,
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(ReportFormat::Table),
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format '{other}' (expected table, csv, or json)")),
        }
    }
}

/// Renders a report in the requested format. Byte-identical output for
/// identical reports.
pub fn emit_report(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
            out
        }
        ReportFormat::Csv => {
            let mut out = String::from("task_id,method,k,episodes,successes,tle_count,success_rate\n");
            for row in &report.rows {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    row.task_id,
                    row.method.name(),
                    row.k,
                    row.episodes,
                    row.successes,
                    row.tle_count,
                    row.success_rate
                ));
            }
            out
        }
        ReportFormat::Table => render_table(report),
    }
}

/// Category-grouped table: one row per method, one column group per category
/// with k=0/k=1 sub-columns, followed by the per-task rows.
fn render_table(report: &Report) -> String {
    let mut ks: Vec<u8> = report.rows.iter().map(|r| r.k).collect();
    ks.sort_unstable();
    ks.dedup();
    let mut methods: Vec<BenchMethod> = report.rows.iter().map(|r| r.method).collect();
    methods.sort_unstable();
    methods.dedup();

    let method_width = 18;
    let cell_width = 7;
    let group_width = ks.len() * cell_width;

    let mut out = String::new();
    out.push_str(&format!("{:<method_width$}", "method"));
    for category in FunctionCount::ALL {
        out.push_str(&format!(" | {:<group_width$}", category.label()));
    }
    out.push('\n');
    out.push_str(&format!("{:<method_width$}", ""));
    for _ in FunctionCount::ALL {
        out.push_str(" | ");
        for k in &ks {
            out.push_str(&format!("{:<cell_width$}", format!("k={k}")));
        }
    }
    out.push('\n');
    for method in &methods {
        out.push_str(&format!("{:<method_width$}", method.name()));
        for category in FunctionCount::ALL {
            out.push_str(" | ");
            for k in &ks {
                let mean = report
                    .categories
                    .iter()
                    .find(|c| c.method == *method && c.k == *k && c.category == category)
                    .map(|c| format!("{:.2}", c.mean_rate))
                    .unwrap_or_else(|| "-".to_string());
                out.push_str(&format!("{mean:<cell_width$}"));
            }
        }
        out.push('\n');
    }

    out.push('\n');
    out.push_str(&format!(
        "{:<28}{:<18}{:<4}{:<10}{:<11}{:<5}{}\n",
        "task", "method", "k", "episodes", "successes", "tle", "rate"
    ));
    for row in &report.rows {
        out.push_str(&format!(
            "{:<28}{:<18}{:<4}{:<10}{:<11}{:<5}{:.2}\n",
            row.task_id,
            row.method.name(),
            row.k,
            row.episodes,
            row.successes,
            row.tle_count,
            row.success_rate
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn result(task: &str, score: i8, tle: bool) -> EpisodeResult {
        EpisodeResult {
            task_id: task.to_string(),
            seed: 0,
            score,
            steps_taken: 0,
            tle,
            trace: Vec::new(),
        }
    }

    #[test]
    fn rates_are_successes_over_episodes() {
        let results: Vec<EpisodeResult> = (0..50)
            .map(|i| result("click-test", if i < 40 { 1 } else { -1 }, false))
            .collect();
        let report = aggregate(&[CellOutcome {
            task_id: "click-test".into(),
            method: BenchMethod::WebWise,
            k: 0,
            results,
        }]);
        let row = &report.rows[0];
        assert_eq!(row.episodes, 50);
        assert_eq!(row.successes, 40);
        assert!((row.success_rate - 0.80).abs() < 1e-12);
    }

    #[test]
    fn category_means_are_unweighted() {
        // Two Variable-category tasks with rates 1.0 and 0.5 average to 0.75.
        let perfect: Vec<EpisodeResult> = (0..2).map(|_| result("guess-number", 1, false)).collect();
        let half = vec![result("navigate-tree", 1, false), result("navigate-tree", -1, false)];
        let report = aggregate(&[
            CellOutcome {
                task_id: "guess-number".into(),
                method: BenchMethod::WebWise,
                k: 0,
                results: perfect,
            },
            CellOutcome {
                task_id: "navigate-tree".into(),
                method: BenchMethod::WebWise,
                k: 0,
                results: half,
            },
        ]);
        let category = report
            .categories
            .iter()
            .find(|c| c.category == FunctionCount::Variable)
            .unwrap();
        assert!((category.mean_rate - 0.75).abs() < 1e-12);
    }

    #[test]
    fn tle_episodes_count_as_failures() {
        let results = vec![result("click-test", -1, true), result("click-test", -1, true)];
        let report = aggregate(&[CellOutcome {
            task_id: "click-test".into(),
            method: BenchMethod::WholeDom,
            k: 0,
            results,
        }]);
        let row = &report.rows[0];
        assert_eq!(row.tle_count, row.episodes);
        assert_eq!(row.success_rate, 0.0);
        assert!(row.tle_count <= row.episodes - row.successes);
    }

    #[test]
    fn csv_has_one_header_and_one_line_per_row() {
        let report = aggregate(&[CellOutcome {
            task_id: "click-test".into(),
            method: BenchMethod::WebWise,
            k: 1,
            results: vec![result("click-test", 1, false)],
        }]);
        let csv = emit_report(&report, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], "task_id,method,k,episodes,successes,tle_count,success_rate");
        assert_eq!(lines[1], "click-test,webwise,1,1,1,0,1");
    }

    #[test]
    fn emission_is_deterministic_and_order_insensitive() {
        let cell_a = CellOutcome {
            task_id: "click-test".into(),
            method: BenchMethod::WebWise,
            k: 0,
            results: vec![result("click-test", 1, false)],
        };
        let cell_b = CellOutcome {
            task_id: "enter-text".into(),
            method: BenchMethod::FilteredDom,
            k: 1,
            results: vec![result("enter-text", -1, false)],
        };
        let one = aggregate(&[cell_a.clone(), cell_b.clone()]);
        let two = aggregate(&[cell_b, cell_a]);
        for format in [ReportFormat::Table, ReportFormat::Csv, ReportFormat::Json] {
            assert_eq!(emit_report(&one, format), emit_report(&two, format));
        }
    }

    #[test]
    fn table_groups_categories_in_fixed_order() {
        let report = aggregate(&[CellOutcome {
            task_id: "click-test".into(),
            method: BenchMethod::WebWise,
            k: 0,
            results: vec![result("click-test", 1, false)],
        }]);
        let table = emit_report(&report, ReportFormat::Table);
        let header = table.lines().next().unwrap();
        let positions: Vec<usize> = FunctionCount::ALL
            .iter()
            .map(|c| header.find(c.label()).expect("category in header"))
            .collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }
}
