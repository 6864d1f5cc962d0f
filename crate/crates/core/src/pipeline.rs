//! Per-page evaluation pipeline and corpus fan-out.
//!
//! A page evaluation is pure: preprocess the predicted markdown, extract
//! typed elements, build the ground-truth unit lists per component, align
//! each component with adjacency search matching, and score the alignment.
//! Corpus evaluation fans pages out to a rayon pool when the `parallel`
//! feature is enabled; results are folded back in page order, so worker
//! count never changes a reported number.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use crate::annotation::{BlockCategory, Dataset, GroundTruthPage, TableAttributes, TextAttributes};
use crate::error::{EvalError, Result};
use crate::extract::{self, ElementKind, ExtractedDoc};
use crate::matcher::{adjacency_search_match, apply_ignore_rules, FilteredMatch, MatchConfig};
use crate::report::{self, EvalReport, OverallMode, PageScores, PairRecord};

#[derive(Debug, Clone)]
pub struct EvalOptions {
    pub match_config: MatchConfig,
    pub repeat_cap: usize,
    /// Categories treated as ignorable boilerplate; masked categories are
    /// always ignored on top of these.
    pub ignored_categories: HashSet<BlockCategory>,
    pub overall_mode: OverallMode,
    /// Page-attribute selectors to group report statistics by.
    pub group_by: Vec<String>,
    /// Worker count for corpus evaluation; 0 uses all available cores, 1
    /// forces the sequential path.
    pub jobs: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            match_config: MatchConfig::default(),
            repeat_cap: extract::DEFAULT_REPEAT_CAP,
            ignored_categories: default_ignored_categories(),
            overall_mode: OverallMode::ComponentMean,
            group_by: vec![
                "pdf_type".to_owned(),
                "layout_type".to_owned(),
                "language".to_owned(),
                "special_issues".to_owned(),
            ],
            jobs: 0,
        }
    }
}

pub fn default_ignored_categories() -> HashSet<BlockCategory> {
    BlockCategory::ALL.iter().copied().filter(|c| c.is_default_ignored()).collect()
}

/// One ground-truth unit participating in matching.
#[derive(Debug, Clone)]
pub struct GtUnit {
    pub block_id: String,
    pub category: BlockCategory,
    pub text: String,
    pub order: Option<u32>,
    pub text_attributes: Option<TextAttributes>,
    pub table_attributes: Option<TableAttributes>,
}

/// Matching inputs and outputs for one component on one page.
#[derive(Debug, Clone, Default)]
pub struct ComponentData {
    pub gt: Vec<GtUnit>,
    pub pred_texts: Vec<String>,
    pub pred_offsets: Vec<usize>,
    pub matched: FilteredMatch,
}

/// Everything the scorer needs for one page.
#[derive(Debug, Clone)]
pub struct PageArtifacts<'a> {
    pub page: &'a GroundTruthPage,
    pub text: ComponentData,
    pub formula: ComponentData,
    pub table: ComponentData,
}

#[derive(Debug, Clone)]
pub struct PageEvaluation {
    pub scores: PageScores,
    pub pairs: Vec<PairRecord>,
    pub warnings: Vec<String>,
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Normalized matching text for a ground-truth block: code is compared
/// verbatim, everything else is whitespace-collapsed with inline formulas
/// converted the same way prediction paragraphs are.
fn gt_match_text(category: BlockCategory, content: &str) -> String {
    if category == BlockCategory::CodeBlock {
        content.to_owned()
    } else {
        extract::inline_formula_to_unicode(&collapse_ws(content))
    }
}

fn build_components(page: &GroundTruthPage, doc: &ExtractedDoc) -> (ComponentData, ComponentData, ComponentData) {
    let mut text = ComponentData::default();
    let mut formula = ComponentData::default();
    let mut table = ComponentData::default();

    let mut ordered: Vec<&crate::annotation::Block> = page.blocks.iter().collect();
    // Reading order first; blocks without an order index keep file order at
    // the tail so adjacency stays meaningful for body text.
    ordered.sort_by_key(|b| b.order.map_or((1u8, 0u32), |o| (0, o)));
    for block in ordered {
        let Some(content) = block.content.as_deref() else { continue };
        let unit = GtUnit {
            block_id: block.id.clone(),
            category: block.category,
            text: String::new(),
            order: block.order,
            text_attributes: block.text_attributes.clone(),
            table_attributes: block.table_attributes.clone(),
        };
        match block.category {
            BlockCategory::Table => {
                table.gt.push(GtUnit { text: content.trim().to_owned(), ..unit });
            }
            BlockCategory::EquationIsolated => {
                formula.gt.push(GtUnit { text: content.trim().to_owned(), ..unit });
            }
            c if c.is_text_bearing() => {
                text.gt.push(GtUnit { text: gt_match_text(c, content), ..unit });
            }
            _ => {}
        }
    }

    for element in &doc.elements {
        let bucket = match element.kind {
            ElementKind::TextParagraph | ElementKind::CodeBlock => &mut text,
            ElementKind::DisplayFormula => &mut formula,
            ElementKind::TableHtml => &mut table,
        };
        bucket.pred_texts.push(element.content.clone());
        bucket.pred_offsets.push(element.start);
    }

    (text, formula, table)
}

/// Evaluate one page's predicted markdown against its ground truth.
pub fn evaluate_page(
    page: &GroundTruthPage,
    markdown: &str,
    options: &EvalOptions,
) -> Result<PageEvaluation> {
    let preprocessed = extract::preprocess_with(markdown, options.repeat_cap);
    let doc = extract::extract_elements(&preprocessed);
    let (mut text, mut formula, mut table) = build_components(page, &doc);

    let no_ignores = HashSet::new();
    for (component, ignores) in [
        (&mut text, &options.ignored_categories),
        (&mut formula, &no_ignores),
        (&mut table, &no_ignores),
    ] {
        let gt_texts: Vec<String> = component.gt.iter().map(|u| u.text.clone()).collect();
        let categories: Vec<BlockCategory> = component.gt.iter().map(|u| u.category).collect();
        let raw = adjacency_search_match(&gt_texts, &component.pred_texts, &options.match_config);
        component.matched = apply_ignore_rules(
            &categories,
            &gt_texts,
            &component.pred_texts,
            &raw,
            &options.match_config,
            ignores,
        );
    }

    let artifacts = PageArtifacts { page, text, formula, table };
    let (scores, pairs) = report::page_scores(&artifacts)?;
    Ok(PageEvaluation { scores, pairs, warnings: doc.warnings })
}

/// Corpus-level evaluation result: the aggregated report plus the pair-level
/// records task-specific views are built from.
#[derive(Debug, Clone)]
pub struct CorpusEvaluation {
    pub report: EvalReport,
    pub pairs: Vec<PairRecord>,
    pub warnings: Vec<String>,
}

/// Evaluate every page of `dataset` against `predictions` (page_id →
/// markdown). Pages without a prediction are scored as fully unmatched, with
/// a warning.
pub fn evaluate_corpus(
    dataset: &Dataset,
    predictions: &BTreeMap<String, String>,
    options: &EvalOptions,
) -> Result<CorpusEvaluation> {
    let evaluations = run_pages(dataset, predictions, options)?;

    let mut warnings = Vec::new();
    let mut per_page = Vec::with_capacity(evaluations.len());
    let mut pairs = Vec::new();
    for (page, eval) in dataset.pages.iter().zip(evaluations) {
        if !predictions.contains_key(&page.page_id) {
            warnings.push(format!("no prediction for page {}; scored as unmatched", page.page_id));
        }
        warnings.extend(eval.warnings.iter().map(|w| format!("{}: {w}", page.page_id)));
        per_page.push(eval.scores);
        pairs.extend(eval.pairs);
    }

    let overall = report::overall(&per_page, &pairs, options.overall_mode);
    let mut groups = BTreeMap::new();
    for selector in &options.group_by {
        let mut stats = Vec::new();
        for metric in report::METRICS {
            stats.extend(report::aggregate(&per_page, selector, metric)?);
        }
        groups.insert(selector.clone(), stats);
    }

    let report = EvalReport { per_page, overall, groups };
    Ok(CorpusEvaluation { report, pairs, warnings })
}

fn evaluate_one<'a>(
    page: &'a GroundTruthPage,
    predictions: &BTreeMap<String, String>,
    options: &EvalOptions,
) -> Result<PageEvaluation> {
    let markdown = predictions.get(&page.page_id).map(String::as_str).unwrap_or("");
    evaluate_page(page, markdown, options)
}

#[cfg(feature = "parallel")]
fn run_pages(
    dataset: &Dataset,
    predictions: &BTreeMap<String, String>,
    options: &EvalOptions,
) -> Result<Vec<PageEvaluation>> {
    use rayon::prelude::*;

    if options.jobs == 1 {
        return run_pages_seq(dataset, predictions, options);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.jobs)
        .build()
        .map_err(|e| EvalError::Invalid(format!("failed to build worker pool: {e}")))?;
    pool.install(|| {
        dataset
            .pages
            .par_iter()
            .map(|page| evaluate_one(page, predictions, options))
            .collect()
    })
}

#[cfg(not(feature = "parallel"))]
fn run_pages(
    dataset: &Dataset,
    predictions: &BTreeMap<String, String>,
    options: &EvalOptions,
) -> Result<Vec<PageEvaluation>> {
    run_pages_seq(dataset, predictions, options)
}

/// Sequential fallback; also the `--jobs 1` path.
pub fn run_pages_seq(
    dataset: &Dataset,
    predictions: &BTreeMap<String, String>,
    options: &EvalOptions,
) -> Result<Vec<PageEvaluation>> {
    dataset.pages.iter().map(|page| evaluate_one(page, predictions, options)).collect()
}

/// Load per-page markdown predictions. A directory yields one entry per
/// `<page_id>.md` file; a `.jsonl` file yields one entry per
/// `{"page_id", "markdown"}` line.
pub fn load_predictions(path: &Path) -> Result<BTreeMap<String, String>> {
    let io_err = |source| EvalError::Io { path: path.to_owned(), source };
    let mut predictions = BTreeMap::new();
    if path.is_dir() {
        let mut entries: Vec<_> = std::fs::read_dir(path)
            .map_err(io_err)?
            .collect::<std::io::Result<Vec<_>>>()
            .map_err(io_err)?;
        entries.sort_by_key(|e| e.file_name());
        for entry in entries {
            let p = entry.path();
            if p.extension().is_some_and(|e| e == "md") {
                let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
                let text = std::fs::read_to_string(&p)
                    .map_err(|source| EvalError::Io { path: p.clone(), source })?;
                predictions.insert(stem, text);
            }
        }
    } else {
        #[derive(serde::Deserialize)]
        struct Line {
            page_id: String,
            markdown: String,
        }
        let text = std::fs::read_to_string(path).map_err(io_err)?;
        for (no, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: Line = serde_json::from_str(line).map_err(|e| {
                EvalError::Invalid(format!("{}:{}: bad jsonl line: {e}", path.display(), no + 1))
            })?;
            predictions.insert(parsed.page_id, parsed.markdown);
        }
    }
    Ok(predictions)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::gt_page_to_markdown;
    use crate::fixtures;

    fn identity_predictions(dataset: &Dataset) -> BTreeMap<String, String> {
        dataset
            .pages
            .iter()
            .map(|p| (p.page_id.clone(), gt_page_to_markdown(p).unwrap()))
            .collect()
    }

    #[test]
    fn identity_page_scores_are_perfect() {
        let corpus = fixtures::corpus(12, 99);
        let options = EvalOptions::default();
        for page in &corpus.dataset.pages {
            let md = gt_page_to_markdown(page).unwrap();
            let eval = evaluate_page(page, &md, &options).unwrap();
            let s = &eval.scores;
            for (name, value, perfect) in [
                ("text_edit", s.text_edit, 0.0),
                ("formula_edit", s.formula_edit, 0.0),
                ("formula_bleu", s.formula_bleu, 1.0),
                ("table_teds", s.table_teds, 1.0),
                ("table_edit", s.table_edit, 0.0),
                ("read_order_edit", s.read_order_edit, 0.0),
            ] {
                if let Some(v) = value {
                    assert_eq!(v, perfect, "{name} on {}", page.page_id);
                }
            }
        }
    }

    #[test]
    fn empty_prediction_is_full_penalty() {
        let corpus = fixtures::corpus(6, 5);
        let page = corpus
            .dataset
            .pages
            .iter()
            .find(|p| {
                p.blocks.iter().any(|b| b.category == BlockCategory::TextBlock && b.order.is_some())
            })
            .unwrap();
        let eval = evaluate_page(page, "", &EvalOptions::default()).unwrap();
        assert_eq!(eval.scores.text_edit, Some(1.0));
    }

    #[test]
    fn corpus_eval_jobs_do_not_change_results() {
        let corpus = fixtures::corpus(10, 17);
        let preds = identity_predictions(&corpus.dataset);
        let mut opts_one = EvalOptions::default();
        opts_one.jobs = 1;
        let mut opts_eight = EvalOptions::default();
        opts_eight.jobs = 8;
        let a = evaluate_corpus(&corpus.dataset, &preds, &opts_one).unwrap();
        let b = evaluate_corpus(&corpus.dataset, &preds, &opts_eight).unwrap();
        assert_eq!(
            serde_json::to_string(&a.report).unwrap(),
            serde_json::to_string(&b.report).unwrap()
        );
    }

    #[test]
    fn missing_prediction_warns_but_completes() {
        let corpus = fixtures::corpus(3, 2);
        let mut preds = identity_predictions(&corpus.dataset);
        preds.remove(&corpus.dataset.pages[1].page_id);
        let result = evaluate_corpus(&corpus.dataset, &preds, &EvalOptions::default()).unwrap();
        assert!(result.warnings.iter().any(|w| w.contains("no prediction")));
        assert_eq!(result.report.per_page.len(), 3);
    }
}
