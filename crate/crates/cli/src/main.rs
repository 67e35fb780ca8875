//! Benchmark CLI: runs method × task × seed matrices against a scripted or
//! remote backend and reports per-task and per-category success rates.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use webwise_core::harness::{
    emit_sweep, golden_fixture_records, run_benchmark, sweep_task_messages, verify_replay,
    write_text, FixtureMode, HarnessConfig,
};
use webwise_core::llm::write_fixture;
use webwise_core::prompt::BackendKind;
use webwise_core::report::{emit_report, BenchMethod, ReportFormat};

#[derive(Parser)]
#[command(name = "webwise", version, about = "Web-task agent benchmark harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured method x task x seed matrix and report success rates.
    Run(RunArgs),
    /// Repeat the webwise cells once per task-message variant (1..13).
    SweepMessages(SweepArgs),
    /// List the bundled tasks and their classification.
    ListTasks(ListTasksArgs),
    /// Re-execute a replay log and verify the recorded outcomes.
    Replay(ReplayArgs),
    /// Author solver-derived golden fixtures for the scripted backend.
    GenFixtures(GenFixturesArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Harness config file (TOML). Defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Restrict the run to these tasks (repeatable).
    #[arg(long)]
    task: Vec<String>,
    /// Restrict the run to these methods (repeatable).
    #[arg(long)]
    method: Vec<BenchMethod>,
    /// In-context example counts to evaluate (repeatable; 0 and/or 1).
    #[arg(long)]
    k: Vec<u8>,
    /// Episodes per cell.
    #[arg(long)]
    episodes: Option<u32>,
    /// Override the configured backend (remote or scripted).
    #[arg(long)]
    backend: Option<BackendKind>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format: table, csv, or json.
    #[arg(long)]
    format: Option<ReportFormat>,
    /// First seed of each cell; episode i uses seed_base + i.
    #[arg(long)]
    seed_base: Option<u64>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    format: Option<ReportFormat>,
}

#[derive(Args)]
struct ListTasksArgs {
    #[arg(long, default_value = "table")]
    format: ReportFormat,
}

#[derive(Args)]
struct ReplayArgs {
    /// Replay log written by `run` (out/replay.jsonl).
    log: PathBuf,
}

#[derive(Args)]
struct GenFixturesArgs {
    /// Fixture layout: single-step or webwise.
    #[arg(long, default_value = "webwise")]
    mode: FixtureMode,
    /// Output fixture path (line-delimited JSON).
    #[arg(long)]
    out: PathBuf,
    /// Tasks to cover (repeatable); all bundled tasks when omitted.
    #[arg(long)]
    task: Vec<String>,
    #[arg(long, default_value_t = 50)]
    episodes: u32,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
}

fn load_config(path: &Option<PathBuf>) -> Result<HarnessConfig> {
    match path {
        Some(path) => HarnessConfig::from_path(path)
            .with_context(|| format!("loading config {}", path.display())),
        None => Ok(HarnessConfig::default()),
    }
}

fn apply_overrides(cfg: &mut HarnessConfig, args: &RunArgs) {
    if !args.task.is_empty() {
        cfg.tasks.tasks = args.task.clone();
    }
    if !args.method.is_empty() {
        cfg.methods.methods = args.method.clone();
    }
    if !args.k.is_empty() {
        cfg.methods.k = args.k.clone();
    }
    if let Some(episodes) = args.episodes {
        cfg.episodes.count = episodes;
    }
    if let Some(backend) = args.backend {
        cfg.llm.llm.backend = backend;
    }
    if let Some(seed_base) = args.seed_base {
        cfg.episodes.seed_base = seed_base;
    }
    if let Some(format) = args.format {
        cfg.output.format = format;
    }
}

fn cmd_run(args: RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.config)?;
    apply_overrides(&mut cfg, &args);
    let run = run_benchmark(&cfg)?;
    let text = emit_report(&run.report, cfg.output.format);
    match &args.out {
        Some(path) => {
            write_text(path, &text)?;
            println!("report written to {}", path.display());
        }
        None => print!("{text}"),
    }
    println!("replay log: {}", run.replay_path.display());
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    let mut cfg = HarnessConfig::from_path(&args.config)?;
    if let Some(format) = args.format {
        cfg.output.format = format;
    }
    let sweep = sweep_task_messages(&cfg)?;
    let text = emit_sweep(&sweep, cfg.output.format);
    match &args.out {
        Some(path) => {
            write_text(path, &text)?;
            println!("sweep report written to {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_list_tasks(args: ListTasksArgs) -> Result<()> {
    let tasks = webwise_core::list_tasks();
    match args.format {
        ReportFormat::Json => {
            println!("{}", serde_json::to_string_pretty(&tasks)?);
        }
        ReportFormat::Csv => {
            println!("task_id,num_functions_category,incorrect_answers_present,target_not_in_initial_dom");
            for task in tasks {
                println!(
                    "{},{},{},{}",
                    task.task_id,
                    task.num_functions_category.label(),
                    task.incorrect_answers_present,
                    task.target_not_in_initial_dom
                );
            }
        }
        ReportFormat::Table => {
            println!(
                "{:<28}{:<20}{:<19}{}",
                "task", "functions", "incorrect answers", "target not in initial DOM"
            );
            for task in tasks {
                println!(
                    "{:<28}{:<20}{:<19}{}",
                    task.task_id,
                    task.num_functions_category.label(),
                    if task.incorrect_answers_present { "yes" } else { "no" },
                    if task.target_not_in_initial_dom { "yes" } else { "no" }
                );
            }
        }
    }
    Ok(())
}

fn cmd_replay(args: ReplayArgs) -> Result<()> {
    let report = verify_replay(&args.log)?;
    for divergence in &report.divergences {
        eprintln!("DIVERGED: {divergence}");
    }
    println!("replayed {} episodes, {} divergences", report.episodes, report.divergences.len());
    if !report.divergences.is_empty() {
        bail!("replay diverged from the recorded outcomes");
    }
    Ok(())
}

fn cmd_gen_fixtures(args: GenFixturesArgs) -> Result<()> {
    let tasks: Vec<String> = if args.task.is_empty() {
        webwise_core::list_tasks().into_iter().map(|t| t.task_id).collect()
    } else {
        args.task.clone()
    };
    let records = golden_fixture_records(&tasks, args.seed_base, args.episodes, args.mode)?;
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    write_fixture(&args.out, &records)?;
    println!("wrote {} fixture records to {}", records.len(), args.out.display());
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => cmd_run(args),
        Command::SweepMessages(args) => cmd_sweep(args),
        Command::ListTasks(args) => cmd_list_tasks(args),
        Command::Replay(args) => cmd_replay(args),
        Command::GenFixtures(args) => cmd_gen_fixtures(args),
    }
}
