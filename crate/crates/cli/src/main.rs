//! Command-line front end: wires dataset loading, extraction, matching, and
//! scoring into the end-to-end, task-specific, and statistics workflows.

use std::collections::HashSet;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::Context;
use clap::{Parser, ValueEnum};

use doceval::annotation::{self, BlockCategory};
use doceval::error::EvalError;
use doceval::layout;
use doceval::matcher::MatchConfig;
use doceval::pipeline::{self, EvalOptions};
use doceval::report::{self, OverallMode, ReportFormat};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Task {
    End2end,
    Ocr,
    Table,
    Formula,
    Layout,
    Stats,
    Validate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OverallModeArg {
    ComponentMean,
    PairPooled,
}

#[derive(Debug, Parser)]
#[command(
    name = "doceval",
    about = "Evaluate document-parsing model output against annotated ground truth",
    version
)]
struct Cli {
    /// Ground-truth annotation file (JSON).
    #[arg(long)]
    gt: PathBuf,

    /// Predictions: a directory of <page_id>.md files, a JSONL file of
    /// {"page_id", "markdown"} lines, or a detections JSON file for --task
    /// layout.
    #[arg(long)]
    pred: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "end2end")]
    task: Task,

    /// Report format: md, csv, or json.
    #[arg(long, default_value = "md")]
    format: String,

    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Page attributes to group report statistics by.
    #[arg(long, value_delimiter = ',', default_values_t = [
        "pdf_type".to_string(),
        "layout_type".to_string(),
        "language".to_string(),
        "special_issues".to_string(),
    ])]
    group_by: Vec<String>,

    /// Stage-1 similarity threshold for matching, in (0, 1].
    #[arg(long, default_value_t = 0.7)]
    match_threshold: f64,

    /// Fuzzy containment ratio for stage-2 merging, in (0, 1].
    #[arg(long, default_value_t = 0.9)]
    containment_ratio: f64,

    /// IoU thresholds for layout mAP (comma separated).
    #[arg(long, value_delimiter = ',')]
    iou_thresholds: Option<Vec<f64>>,

    /// How Overall^Edit combines components.
    #[arg(long, value_enum, default_value = "component-mean")]
    overall_mode: OverallModeArg,

    /// Worker count; 0 uses all cores. Results are identical at any level.
    #[arg(long, default_value_t = 0)]
    jobs: usize,

    /// Override the ignored-category list (comma-separated category names);
    /// masked categories are always ignored.
    #[arg(long, value_delimiter = ',')]
    ignore_categories: Option<Vec<String>>,

    /// Cap on runs of one repeated character during preprocessing.
    #[arg(long, default_value_t = doceval::extract::DEFAULT_REPEAT_CAP)]
    repeat_cap: usize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(
        env_logger::Env::new().filter_or("DOCPARSE_EVAL_LOG", "warn"),
    )
    .init();

    match run(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            if err.downcast_ref::<EvalError>().is_some() || err.downcast_ref::<std::io::Error>().is_some() {
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let format = ReportFormat::from_str(&cli.format)?;

    match cli.task {
        Task::Validate => run_validate(&cli),
        Task::Stats => run_stats(&cli, format),
        Task::Layout => run_layout(&cli, format),
        Task::End2end | Task::Ocr | Task::Table | Task::Formula => run_eval(&cli, format),
    }
}

fn eval_options(cli: &Cli) -> anyhow::Result<EvalOptions> {
    let mut options = EvalOptions {
        match_config: MatchConfig {
            similarity_threshold: cli.match_threshold,
            containment_ratio: cli.containment_ratio,
        },
        repeat_cap: cli.repeat_cap,
        overall_mode: match cli.overall_mode {
            OverallModeArg::ComponentMean => OverallMode::ComponentMean,
            OverallModeArg::PairPooled => OverallMode::PairPooled,
        },
        group_by: cli.group_by.clone(),
        jobs: cli.jobs,
        ..EvalOptions::default()
    };
    if !(0.0 < cli.match_threshold && cli.match_threshold <= 1.0) {
        return Err(EvalError::Invalid("--match-threshold must lie in (0, 1]".to_owned()).into());
    }
    if !(0.0 < cli.containment_ratio && cli.containment_ratio <= 1.0) {
        return Err(EvalError::Invalid("--containment-ratio must lie in (0, 1]".to_owned()).into());
    }
    if let Some(names) = &cli.ignore_categories {
        let mut set = HashSet::new();
        for name in names.iter().filter(|n| !n.trim().is_empty()) {
            let category = BlockCategory::from_str(name.trim())
                .map_err(EvalError::Invalid)
                .with_context(|| format!("--ignore-categories entry {name:?}"))?;
            set.insert(category);
        }
        options.ignored_categories = set;
    }
    Ok(options)
}

fn emit(cli: &Cli, bytes: &[u8]) -> anyhow::Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, bytes)
            .with_context(|| format!("writing report to {}", path.display()))?,
        None => std::io::stdout().write_all(bytes).context("writing report to stdout")?,
    }
    Ok(())
}

fn run_validate(cli: &Cli) -> anyhow::Result<ExitCode> {
    let dataset = annotation::parse_dataset(&cli.gt)?;
    let report = annotation::validate(&dataset);
    for finding in &report.findings {
        println!("{finding}");
    }
    if report.is_clean() {
        println!("ok: {} pages, no findings", dataset.pages.len());
        Ok(ExitCode::SUCCESS)
    } else {
        println!("{} finding(s)", report.findings.len());
        Ok(ExitCode::from(1))
    }
}

fn run_stats(cli: &Cli, format: ReportFormat) -> anyhow::Result<ExitCode> {
    let dataset = annotation::parse_dataset(&cli.gt)?;
    let stats = annotation::dataset_stats(&dataset);
    let bytes = match format {
        ReportFormat::Json => {
            let mut b = serde_json::to_vec_pretty(&stats)?;
            b.push(b'\n');
            b
        }
        _ => render_stats_text(&stats).into_bytes(),
    };
    emit(cli, &bytes)?;
    Ok(ExitCode::SUCCESS)
}

fn render_stats_text(stats: &annotation::StatsReport) -> String {
    use std::fmt::Write;
    let mut out = String::new();
    let _ = writeln!(out, "pages: {}", stats.total_pages);
    let _ = writeln!(out, "blocks: {}", stats.total_blocks);
    let _ = writeln!(out, "spans: {}", stats.total_spans);
    let sections: &[(&str, &std::collections::BTreeMap<String, usize>)] = &[
        ("pages by pdf_type", &stats.pages_by_pdf_type),
        ("pages by layout_type", &stats.pages_by_layout_type),
        ("pages by language", &stats.pages_by_language),
        ("pages by special_issue", &stats.pages_by_special_issue),
        ("blocks by category", &stats.blocks_by_category),
        ("spans by category", &stats.spans_by_category),
        ("text blocks by language", &stats.text_blocks_by_language),
        ("text blocks by background", &stats.text_blocks_by_background),
        ("text blocks by rotation", &stats.text_blocks_by_rotation),
        ("tables by language", &stats.tables_by_language),
        ("tables by frame", &stats.tables_by_frame),
        ("tables by special issue", &stats.tables_by_special_issue),
    ];
    for (title, map) in sections {
        if map.is_empty() {
            continue;
        }
        let _ = writeln!(out, "\n{title}:");
        for (key, count) in map.iter() {
            let _ = writeln!(out, "  {key}: {count}");
        }
    }
    out
}

fn run_layout(cli: &Cli, format: ReportFormat) -> anyhow::Result<ExitCode> {
    let dataset = annotation::load_dataset(&cli.gt)?;
    let pred = cli.pred.as_ref().context("--task layout requires --pred <detections.json>")?;
    let detections = layout::load_detections(pred)?;
    let mut config = layout::MapConfig::default();
    if let Some(thresholds) = &cli.iou_thresholds {
        if thresholds.is_empty() || thresholds.iter().any(|t| !(0.0..=1.0).contains(t)) {
            return Err(EvalError::Invalid("--iou-thresholds must be fractions in [0, 1]".to_owned()).into());
        }
        config.iou_thresholds = thresholds.clone();
    }
    let result = layout::evaluate_map(&dataset, &detections, &config)?;
    let bytes = match format {
        ReportFormat::Json => {
            let mut b = serde_json::to_vec_pretty(&result)?;
            b.push(b'\n');
            b
        }
        _ => {
            use std::fmt::Write;
            let mut out = String::new();
            let _ = writeln!(out, "overall mAP: {:.4}", result.overall);
            let _ = writeln!(out, "\nper category:");
            for (cat, ap) in &result.per_category {
                let _ = writeln!(out, "  {cat}: {ap:.4}");
            }
            let _ = writeln!(out, "\nper page type:");
            for (t, ap) in &result.per_page_type {
                let _ = writeln!(out, "  {t}: {ap:.4}");
            }
            out.into_bytes()
        }
    };
    emit(cli, &bytes)?;
    Ok(ExitCode::SUCCESS)
}

fn run_eval(cli: &Cli, format: ReportFormat) -> anyhow::Result<ExitCode> {
    let dataset = annotation::load_dataset(&cli.gt)?;
    let pred = cli.pred.as_ref().context("this task requires --pred")?;
    let predictions = pipeline::load_predictions(pred)?;
    let options = eval_options(cli)?;
    let evaluation = pipeline::evaluate_corpus(&dataset, &predictions, &options)?;
    for warning in &evaluation.warnings {
        log::warn!("{warning}");
    }

    let bytes = match cli.task {
        Task::End2end => report::render(&evaluation.report, format)?,
        Task::Ocr => report::render_groups("ocr_by_text_attribute", &report::ocr_view(&evaluation.pairs), format)?,
        Task::Table => report::render_groups("table_by_attribute", &report::table_view(&evaluation.pairs), format)?,
        Task::Formula => report::render_groups("formula", &report::formula_view(&evaluation.pairs), format)?,
        _ => unreachable!("handled earlier"),
    };
    emit(cli, &bytes)?;
    Ok(ExitCode::SUCCESS)
}
