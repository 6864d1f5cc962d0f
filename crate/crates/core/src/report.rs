//! Aggregation of pair- and page-level scores into report shapes: overall
//! end-to-end rows per language slice, per-attribute mean/variance tables,
//! and deterministic rendering to markdown, CSV, or JSON.
//!
//! JSON output carries raw fractions in [0, 1]; the markdown and CSV
//! renderings display TEDS and BLEU scaled by 100 and edit distances with
//! three decimals.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::annotation::{PageAttributes, TableAttributes, TextAttributes};
use crate::error::{EvalError, Result};
use crate::metrics::{bleu, normalized_edit_distance, reading_order_score, teds};
use crate::pipeline::{ComponentData, PageArtifacts};

/// Metric names, in report column order.
pub const METRICS: &[&str] =
    &["text_edit", "formula_edit", "formula_bleu", "table_teds", "table_edit", "read_order_edit"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Component {
    Text,
    Formula,
    Table,
}

/// Scores for one page; a score is absent when the page has no ground-truth
/// units of that component.
#[derive(Debug, Clone, Serialize)]
pub struct PageScores {
    pub page_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_edit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_edit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_bleu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_teds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_edit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub read_order_edit: Option<f64>,
    pub attributes: PageAttributes,
}

impl PageScores {
    pub fn metric(&self, name: &str) -> Result<Option<f64>> {
        Ok(match name {
            "text_edit" => self.text_edit,
            "formula_edit" => self.formula_edit,
            "formula_bleu" => self.formula_bleu,
            "table_teds" => self.table_teds,
            "table_edit" => self.table_edit,
            "read_order_edit" => self.read_order_edit,
            other => return Err(EvalError::UnknownAttribute(other.to_owned())),
        })
    }
}

/// One scored pair (or unmatched ground-truth penalty entry), kept so
/// task-specific reports can slice by block-level attributes.
#[derive(Debug, Clone, Serialize)]
pub struct PairRecord {
    pub page_id: String,
    pub component: Component,
    pub gt_blocks: Vec<String>,
    pub matched: bool,
    pub edit: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bleu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub teds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_attributes: Option<TextAttributes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_attributes: Option<TableAttributes>,
}

/// Mean/population-variance of one metric within one attribute group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub group: String,
    pub metric: String,
    pub mean: f64,
    pub variance: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OverallMode {
    /// Overall edit is the unweighted mean of the four component means.
    ComponentMean,
    /// Overall edit pools every pair-level edit entry (and one reading-order
    /// entry per page) before averaging.
    PairPooled,
}

/// One summary row per language slice.
#[derive(Debug, Clone, Serialize)]
pub struct OverallRow {
    pub slice: String,
    pub pages: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_edit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_edit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub formula_bleu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_teds: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_edit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub read_order_edit: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall_edit: Option<f64>,
    /// Components that were absent corpus-wide and therefore excluded from
    /// the overall mean.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub missing_components: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub per_page: Vec<PageScores>,
    pub overall: Vec<OverallRow>,
    pub groups: BTreeMap<String, Vec<GroupStats>>,
}

// ---------------------------------------------------------------------------
// Page scoring
// ---------------------------------------------------------------------------

fn mean(entries: &[f64]) -> Option<f64> {
    if entries.is_empty() {
        None
    } else {
        Some(entries.iter().sum::<f64>() / entries.len() as f64)
    }
}

fn join_texts(component: &ComponentData, indices: &[usize], gt_side: bool) -> String {
    let texts: Vec<&str> = indices
        .iter()
        .map(|&i| {
            if gt_side {
                component.gt[i].text.as_str()
            } else {
                component.pred_texts[i].as_str()
            }
        })
        .collect();
    texts.join(" ")
}

/// Compute per-page scores and pair records from matched components.
pub fn page_scores(artifacts: &PageArtifacts) -> Result<(PageScores, Vec<PairRecord>)> {
    let page = artifacts.page;
    let mut pairs = Vec::new();

    // Text: normalized edit distance over scored pairs, penalty 1 per scored
    // unmatched ground-truth unit.
    let text = &artifacts.text;
    let mut text_entries = Vec::new();
    for pair in &text.matched.pairs {
        if !pair.scored {
            continue;
        }
        text_entries.push(pair.distance);
        let first = &text.gt[pair.gt[0]];
        pairs.push(PairRecord {
            page_id: page.page_id.clone(),
            component: Component::Text,
            gt_blocks: pair.gt.iter().map(|&i| text.gt[i].block_id.clone()).collect(),
            matched: true,
            edit: pair.distance,
            bleu: None,
            teds: None,
            text_attributes: first.text_attributes.clone(),
            table_attributes: None,
        });
    }
    for &i in &text.matched.unmatched_gt {
        text_entries.push(1.0);
        pairs.push(PairRecord {
            page_id: page.page_id.clone(),
            component: Component::Text,
            gt_blocks: vec![text.gt[i].block_id.clone()],
            matched: false,
            edit: 1.0,
            bleu: None,
            teds: None,
            text_attributes: text.gt[i].text_attributes.clone(),
            table_attributes: None,
        });
    }
    let text_edit = mean(&text_entries);

    // Formulas: edit distance and BLEU per pair; unmatched ground truth
    // scores worst on both.
    let formula = &artifacts.formula;
    let mut formula_edits = Vec::new();
    let mut formula_bleus = Vec::new();
    for pair in &formula.matched.pairs {
        let gt_text = join_texts(formula, &pair.gt, true);
        let pred_text = join_texts(formula, &pair.pred, false);
        let b = bleu(&gt_text, &pred_text);
        formula_edits.push(pair.distance);
        formula_bleus.push(b);
        pairs.push(PairRecord {
            page_id: page.page_id.clone(),
            component: Component::Formula,
            gt_blocks: pair.gt.iter().map(|&i| formula.gt[i].block_id.clone()).collect(),
            matched: true,
            edit: pair.distance,
            bleu: Some(b),
            teds: None,
            text_attributes: None,
            table_attributes: None,
        });
    }
    for &i in &formula.matched.unmatched_gt {
        formula_edits.push(1.0);
        formula_bleus.push(0.0);
        pairs.push(PairRecord {
            page_id: page.page_id.clone(),
            component: Component::Formula,
            gt_blocks: vec![formula.gt[i].block_id.clone()],
            matched: false,
            edit: 1.0,
            bleu: Some(0.0),
            teds: None,
            text_attributes: None,
            table_attributes: None,
        });
    }

    // Tables: TEDS and edit distance over normalized serializations.
    let table = &artifacts.table;
    let mut table_teds_entries = Vec::new();
    let mut table_edit_entries = Vec::new();
    for pair in &table.matched.pairs {
        let gt_html = join_texts(table, &pair.gt, true);
        let pred_html = join_texts(table, &pair.pred, false);
        let teds_score = teds(&gt_html, &pred_html)?;
        let edit = table_serial_edit(&gt_html, &pred_html)?;
        table_teds_entries.push(teds_score);
        table_edit_entries.push(edit);
        let first = &table.gt[pair.gt[0]];
        pairs.push(PairRecord {
            page_id: page.page_id.clone(),
            component: Component::Table,
            gt_blocks: pair.gt.iter().map(|&i| table.gt[i].block_id.clone()).collect(),
            matched: true,
            edit,
            bleu: None,
            teds: Some(teds_score),
            text_attributes: None,
            table_attributes: first.table_attributes.clone(),
        });
    }
    for &i in &table.matched.unmatched_gt {
        table_teds_entries.push(0.0);
        table_edit_entries.push(1.0);
        pairs.push(PairRecord {
            page_id: page.page_id.clone(),
            component: Component::Table,
            gt_blocks: vec![table.gt[i].block_id.clone()],
            matched: false,
            edit: 1.0,
            bleu: None,
            teds: Some(0.0),
            text_attributes: None,
            table_attributes: table.gt[i].table_attributes.clone(),
        });
    }

    // Reading order over text components only.
    let gt_orders: Vec<Option<u32>> = text.gt.iter().map(|u| u.order).collect();
    let has_ordered_text = gt_orders.iter().any(Option::is_some);
    let read_order_edit = has_ordered_text
        .then(|| reading_order_score(&gt_orders, &text.pred_offsets, &text.matched));

    let scores = PageScores {
        page_id: page.page_id.clone(),
        text_edit,
        formula_edit: mean(&formula_edits),
        formula_bleu: mean(&formula_bleus),
        table_teds: mean(&table_teds_entries),
        table_edit: mean(&table_edit_entries),
        read_order_edit,
        attributes: page.attributes.clone(),
    };
    Ok((scores, pairs))
}

/// Edit distance between normalized table serializations; an unparseable
/// prediction is compared raw.
fn table_serial_edit(gt_html: &str, pred_html: &str) -> Result<f64> {
    let gt = crate::metrics::parse_html_table(gt_html)?.serialize();
    let pred = match crate::metrics::parse_html_table(pred_html) {
        Ok(tree) => tree.serialize(),
        Err(_) => pred_html.to_owned(),
    };
    Ok(normalized_edit_distance(&gt, &pred))
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

fn group_keys(attributes: &PageAttributes, selector: &str) -> Result<Vec<String>> {
    Ok(match selector {
        "pdf_type" => vec![attributes.pdf_type.as_str().to_owned()],
        "layout_type" => vec![attributes.layout_type.as_str().to_owned()],
        "language" => vec![attributes.language.as_str().to_owned()],
        "special_issues" => {
            if attributes.special_issues.is_empty() {
                vec!["none".to_owned()]
            } else {
                attributes.special_issues.iter().map(|i| i.as_str().to_owned()).collect()
            }
        }
        other => return Err(EvalError::UnknownAttribute(other.to_owned())),
    })
}

fn stats_of(group: &str, metric: &str, values: &[f64]) -> GroupStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    GroupStats { group: group.to_owned(), metric: metric.to_owned(), mean, variance, count: values.len() }
}

/// Mean and population variance of `metric` per value of the page attribute
/// named by `selector`. Pages lacking the metric are skipped; empty groups
/// are omitted.
pub fn aggregate(pages: &[PageScores], selector: &str, metric: &str) -> Result<Vec<GroupStats>> {
    let mut buckets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for page in pages {
        let Some(value) = page.metric(metric)? else { continue };
        for key in group_keys(&page.attributes, selector)? {
            buckets.entry(key).or_default().push(value);
        }
    }
    Ok(buckets.iter().map(|(group, values)| stats_of(group, metric, values)).collect())
}

/// Summary rows per language slice (`en`, `zh`, and `all`).
pub fn overall(pages: &[PageScores], pairs: &[PairRecord], mode: OverallMode) -> Vec<OverallRow> {
    ["en", "zh", "all"]
        .iter()
        .map(|slice| {
            let selected: Vec<&PageScores> = pages
                .iter()
                .filter(|p| *slice == "all" || p.attributes.language.as_str() == *slice)
                .collect();
            overall_row(slice, &selected, pairs, mode)
        })
        .collect()
}

fn overall_row(slice: &str, pages: &[&PageScores], pairs: &[PairRecord], mode: OverallMode) -> OverallRow {
    let mean_of = |metric: &str| {
        let values: Vec<f64> =
            pages.iter().filter_map(|p| p.metric(metric).expect("known metric")).collect();
        mean(&values)
    };
    let text_edit = mean_of("text_edit");
    let formula_edit = mean_of("formula_edit");
    let formula_bleu = mean_of("formula_bleu");
    let table_teds = mean_of("table_teds");
    let table_edit = mean_of("table_edit");
    let read_order_edit = mean_of("read_order_edit");

    let components =
        [("text_edit", text_edit), ("formula_edit", formula_edit), ("table_edit", table_edit), ("read_order_edit", read_order_edit)];
    let missing_components: Vec<String> = components
        .iter()
        .filter(|(_, v)| v.is_none())
        .map(|(n, _)| (*n).to_owned())
        .collect();

    let overall_edit = match mode {
        OverallMode::ComponentMean => {
            let present: Vec<f64> = components.iter().filter_map(|(_, v)| *v).collect();
            mean(&present)
        }
        OverallMode::PairPooled => {
            let page_ids: std::collections::HashSet<&str> =
                pages.iter().map(|p| p.page_id.as_str()).collect();
            let mut pooled: Vec<f64> = pairs
                .iter()
                .filter(|r| page_ids.contains(r.page_id.as_str()))
                .map(|r| r.edit)
                .collect();
            pooled.extend(pages.iter().filter_map(|p| p.read_order_edit));
            mean(&pooled)
        }
    };

    OverallRow {
        slice: slice.to_owned(),
        pages: pages.len(),
        text_edit,
        formula_edit,
        formula_bleu,
        table_teds,
        table_edit,
        read_order_edit,
        overall_edit,
        missing_components,
    }
}

// ---------------------------------------------------------------------------
// Task-specific views over pair records
// ---------------------------------------------------------------------------

fn pair_stats(buckets: BTreeMap<String, Vec<f64>>, metric: &str) -> Vec<GroupStats> {
    buckets.iter().map(|(group, values)| stats_of(group, metric, values)).collect()
}

/// Per-block text edit distance grouped by text attributes.
pub fn ocr_view(pairs: &[PairRecord]) -> Vec<GroupStats> {
    let mut buckets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for pair in pairs.iter().filter(|p| p.component == Component::Text) {
        let Some(attrs) = &pair.text_attributes else { continue };
        for key in [
            format!("language:{}", attrs.language),
            format!("background:{}", attrs.background),
            format!("rotation:{}", attrs.rotation),
        ] {
            buckets.entry(key).or_default().push(pair.edit);
        }
    }
    pair_stats(buckets, "edit")
}

/// TEDS grouped by table attributes, with with/without splits for the binary
/// special situations.
pub fn table_view(pairs: &[PairRecord]) -> Vec<GroupStats> {
    let mut buckets: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for pair in pairs.iter().filter(|p| p.component == Component::Table) {
        let Some(teds) = pair.teds else { continue };
        let Some(attrs) = &pair.table_attributes else { continue };
        let sign = |b: bool| if b { "+" } else { "-" };
        for key in [
            format!("language:{}", attrs.language),
            format!("frame:{}", attrs.frame),
            format!("merge_cell:{}", sign(attrs.merge_cell)),
            format!("contains_formula:{}", sign(attrs.contains_formula)),
            format!("colorful_background:{}", sign(attrs.colorful_background)),
            format!("rotated:{}", sign(attrs.rotated)),
        ] {
            buckets.entry(key).or_default().push(teds);
        }
    }
    pair_stats(buckets, "teds")
}

/// Edit distance and BLEU over display formulas.
pub fn formula_view(pairs: &[PairRecord]) -> Vec<GroupStats> {
    let formulas: Vec<&PairRecord> =
        pairs.iter().filter(|p| p.component == Component::Formula).collect();
    let edits: Vec<f64> = formulas.iter().map(|p| p.edit).collect();
    let bleus: Vec<f64> = formulas.iter().filter_map(|p| p.bleu).collect();
    let mut out = Vec::new();
    if !edits.is_empty() {
        out.push(stats_of("all", "edit", &edits));
    }
    if !bleus.is_empty() {
        out.push(stats_of("all", "bleu", &bleus));
    }
    out
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Markdown,
    Csv,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "md" | "markdown" | "plain-table" => Ok(ReportFormat::Markdown),
            "csv" => Ok(ReportFormat::Csv),
            "json" | "structured-text" => Ok(ReportFormat::Json),
            other => Err(EvalError::UnknownFormat(other.to_owned())),
        }
    }
}

/// Display convention: edit-style fractions keep three decimals; similarity
/// metrics (TEDS, BLEU) are scaled by 100 with one decimal.
fn display_value(metric: &str, value: f64) -> String {
    if metric.contains("teds") || metric.contains("bleu") {
        format!("{:.1}", value * 100.0)
    } else {
        format!("{value:.3}")
    }
}

fn opt_display(metric: &str, value: Option<f64>) -> String {
    value.map(|v| display_value(metric, v)).unwrap_or_else(|| "-".to_owned())
}

/// Render a report deterministically in the requested format.
pub fn render(report: &EvalReport, format: ReportFormat) -> Result<Vec<u8>> {
    Ok(match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Markdown => render_markdown(report).into_bytes(),
        ReportFormat::Csv => render_csv(report).into_bytes(),
    })
}

const OVERALL_COLUMNS: &[&str] = &[
    "text_edit",
    "formula_edit",
    "formula_bleu",
    "table_teds",
    "table_edit",
    "read_order_edit",
    "overall_edit",
];

fn overall_cell(row: &OverallRow, metric: &str) -> Option<f64> {
    match metric {
        "text_edit" => row.text_edit,
        "formula_edit" => row.formula_edit,
        "formula_bleu" => row.formula_bleu,
        "table_teds" => row.table_teds,
        "table_edit" => row.table_edit,
        "read_order_edit" => row.read_order_edit,
        "overall_edit" => row.overall_edit,
        _ => None,
    }
}

fn render_markdown(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str("## Overall\n\n");
    out.push_str("| slice | pages |");
    for c in OVERALL_COLUMNS {
        let _ = write!(out, " {c} |");
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---|".repeat(OVERALL_COLUMNS.len()));
    out.push('\n');
    for row in &report.overall {
        let _ = write!(out, "| {} | {} |", row.slice, row.pages);
        for c in OVERALL_COLUMNS {
            let _ = write!(out, " {} |", opt_display(c, overall_cell(row, c)));
        }
        out.push('\n');
    }

    for (selector, stats) in &report.groups {
        let _ = write!(out, "\n## By {selector}\n\n");
        out.push_str("| group | metric | mean | variance | count |\n|---|---|---|---|---|\n");
        for s in stats {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {:.4} | {} |",
                s.group,
                s.metric,
                display_value(&s.metric, s.mean),
                s.variance,
                s.count
            );
        }
    }

    out.push_str("\n## Pages\n\n| page_id |");
    for m in METRICS {
        let _ = write!(out, " {m} |");
    }
    out.push_str("\n|---|");
    out.push_str(&"---|".repeat(METRICS.len()));
    out.push('\n');
    for page in &report.per_page {
        let _ = write!(out, "| {} |", page.page_id);
        for m in METRICS {
            let _ = write!(out, " {} |", opt_display(m, page.metric(m).expect("known metric")));
        }
        out.push('\n');
    }
    out
}

fn render_csv(report: &EvalReport) -> String {
    let mut out = String::new();
    out.push_str("section,key,metric,value,count\n");
    for row in &report.overall {
        for c in OVERALL_COLUMNS {
            if let Some(v) = overall_cell(row, c) {
                let _ = writeln!(out, "overall,{},{},{},{}", row.slice, c, display_value(c, v), row.pages);
            }
        }
    }
    for (selector, stats) in &report.groups {
        for s in stats {
            let _ = writeln!(
                out,
                "group:{},{},{},{},{}",
                selector,
                s.group,
                s.metric,
                display_value(&s.metric, s.mean),
                s.count
            );
        }
    }
    for page in &report.per_page {
        for m in METRICS {
            if let Some(v) = page.metric(m).expect("known metric") {
                let _ = writeln!(out, "page,{},{},{},1", page.page_id, m, display_value(m, v));
            }
        }
    }
    out
}

/// Render task-specific group stats as a small table.
pub fn render_groups(title: &str, stats: &[GroupStats], format: ReportFormat) -> Result<Vec<u8>> {
    Ok(match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(&serde_json::json!({ title: stats }))
                .expect("stats serialize");
            bytes.push(b'\n');
            bytes
        }
        ReportFormat::Markdown => {
            let mut out = format!("## {title}\n\n");
            out.push_str("| group | metric | mean | variance | count |\n|---|---|---|---|---|\n");
            for s in stats {
                let _ = writeln!(
                    out,
                    "| {} | {} | {} | {:.4} | {} |",
                    s.group,
                    s.metric,
                    display_value(&s.metric, s.mean),
                    s.variance,
                    s.count
                );
            }
            out.into_bytes()
        }
        ReportFormat::Csv => {
            let mut out = String::from("group,metric,mean,variance,count\n");
            for s in stats {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    s.group,
                    s.metric,
                    display_value(&s.metric, s.mean),
                    s.variance,
                    s.count
                );
            }
            out.into_bytes()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{Language, LayoutType, PdfType, SpecialIssue};

    fn page(id: &str, lang: Language, pdf: PdfType, text_edit: Option<f64>) -> PageScores {
        PageScores {
            page_id: id.to_owned(),
            text_edit,
            formula_edit: None,
            formula_bleu: None,
            table_teds: None,
            table_edit: None,
            read_order_edit: None,
            attributes: PageAttributes {
                pdf_type: pdf,
                layout_type: LayoutType::SingleColumn,
                language: lang,
                special_issues: vec![],
            },
        }
    }

    #[test]
    fn aggregate_mean_and_population_variance() {
        let pages = vec![
            page("a", Language::En, PdfType::Book, Some(0.1)),
            page("b", Language::En, PdfType::Book, Some(0.3)),
        ];
        let stats = aggregate(&pages, "pdf_type", "text_edit").unwrap();
        assert_eq!(stats.len(), 1);
        assert!((stats[0].mean - 0.2).abs() < 1e-12);
        assert!((stats[0].variance - 0.01).abs() < 1e-12);
        assert_eq!(stats[0].count, 2);
    }

    #[test]
    fn single_page_group_has_zero_variance() {
        let pages = vec![page("a", Language::En, PdfType::Notes, Some(0.4))];
        let stats = aggregate(&pages, "pdf_type", "text_edit").unwrap();
        assert_eq!(stats[0].variance, 0.0);
    }

    #[test]
    fn pages_lacking_metric_are_skipped_and_empty_groups_omitted() {
        let pages = vec![
            page("a", Language::En, PdfType::Book, Some(0.2)),
            page("b", Language::En, PdfType::Notes, None),
        ];
        let stats = aggregate(&pages, "pdf_type", "text_edit").unwrap();
        assert_eq!(stats.len(), 1);
        assert_eq!(stats[0].group, "book");
    }

    #[test]
    fn special_issue_grouping_includes_none_bucket() {
        let mut with_issue = page("a", Language::En, PdfType::Book, Some(0.5));
        with_issue.attributes.special_issues = vec![SpecialIssue::Watermark, SpecialIssue::FuzzyScan];
        let without = page("b", Language::En, PdfType::Book, Some(0.1));
        let stats = aggregate(&[with_issue, without], "special_issues", "text_edit").unwrap();
        let groups: Vec<&str> = stats.iter().map(|s| s.group.as_str()).collect();
        assert_eq!(groups, ["fuzzy_scan", "none", "watermark"]);
    }

    #[test]
    fn unknown_selector_or_metric_errors() {
        let pages = vec![page("a", Language::En, PdfType::Book, Some(0.2))];
        assert!(aggregate(&pages, "font_size", "text_edit").is_err());
        assert!(aggregate(&pages, "pdf_type", "line_height").is_err());
    }

    #[test]
    fn weighted_recombination_equals_ungrouped_mean() {
        let pages: Vec<PageScores> = (0..37)
            .map(|i| {
                page(
                    &format!("p{i}"),
                    if i % 3 == 0 { Language::Zh } else { Language::En },
                    PdfType::ALL[i % 9],
                    Some((i as f64 * 0.027) % 1.0),
                )
            })
            .collect();
        for selector in ["pdf_type", "layout_type", "language"] {
            let stats = aggregate(&pages, selector, "text_edit").unwrap();
            let weighted: f64 = stats.iter().map(|s| s.mean * s.count as f64).sum();
            let count: usize = stats.iter().map(|s| s.count).sum();
            let ungrouped: f64 =
                pages.iter().filter_map(|p| p.text_edit).sum::<f64>() / pages.len() as f64;
            assert!((weighted / count as f64 - ungrouped).abs() < 1e-9, "{selector}");
        }
    }

    #[test]
    fn overall_component_mean() {
        let mut p = page("a", Language::En, PdfType::Book, Some(0.2));
        p.formula_edit = Some(0.4);
        p.table_edit = Some(0.2);
        p.read_order_edit = Some(0.2);
        let rows = overall(&[p], &[], OverallMode::ComponentMean);
        let en = rows.iter().find(|r| r.slice == "en").unwrap();
        assert!((en.overall_edit.unwrap() - 0.25).abs() < 1e-12);
        assert!(en.missing_components.is_empty());
    }

    #[test]
    fn overall_flags_missing_components() {
        let p = page("a", Language::En, PdfType::Book, Some(0.0));
        let rows = overall(&[p], &[], OverallMode::ComponentMean);
        let en = rows.iter().find(|r| r.slice == "en").unwrap();
        assert_eq!(en.overall_edit, Some(0.0));
        assert_eq!(
            en.missing_components,
            ["formula_edit", "table_edit", "read_order_edit"]
        );
    }

    #[test]
    fn render_is_deterministic_and_scales_teds() {
        let mut p = page("a", Language::En, PdfType::Book, Some(0.123456));
        p.table_teds = Some(1.0);
        let report = EvalReport {
            overall: overall(&[p.clone()], &[], OverallMode::ComponentMean),
            groups: BTreeMap::from([(
                "pdf_type".to_owned(),
                aggregate(&[p.clone()], "pdf_type", "text_edit").unwrap(),
            )]),
            per_page: vec![p],
        };
        for format in [ReportFormat::Markdown, ReportFormat::Csv, ReportFormat::Json] {
            assert_eq!(render(&report, format).unwrap(), render(&report, format).unwrap());
        }
        let md = String::from_utf8(render(&report, ReportFormat::Markdown).unwrap()).unwrap();
        assert!(md.contains("100.0"), "{md}");
        assert!(md.contains("0.123"), "{md}");
        let empty = EvalReport { per_page: vec![], overall: vec![], groups: BTreeMap::new() };
        let csv = String::from_utf8(render(&empty, ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(csv, "section,key,metric,value,count\n");
    }
}
