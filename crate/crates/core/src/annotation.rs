//! Ground-truth annotation data model: page attributes, layout categories,
//! blocks with nested spans, plus loading, validation, statistics, and a
//! canonical markdown serialization used for identity checks.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EvalError, Result};

/// Slack, in pixels per edge, tolerated when checking that a span bbox lies
/// inside its parent block bbox.
pub const SPAN_CONTAINMENT_SLACK: f64 = 2.0;

macro_rules! string_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $text:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        pub enum $name {
            $(#[serde(rename = $text)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $text),+
                }
            }
        }

        impl FromStr for $name {
            type Err = String;

            fn from_str(s: &str) -> std::result::Result<Self, String> {
                match s {
                    $($text => Ok($name::$variant),)+
                    other => Err(format!(
                        concat!("unknown ", stringify!($name), " {:?}, expected one of: {}"),
                        other,
                        [$($text),+].join(", ")
                    )),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

string_enum!(
    /// Source document type of a page.
    PdfType {
        Book => "book",
        Slides => "slides",
        ResearchReport => "research_report",
        ColorfulTextbook => "colorful_textbook",
        ExamPaper => "exam_paper",
        Magazine => "magazine",
        AcademicLiterature => "academic_literature",
        Notes => "notes",
        Newspaper => "newspaper",
    }
);

string_enum!(
    /// Column layout of a page.
    LayoutType {
        SingleColumn => "single_column",
        DoubleColumn => "double_column",
        ThreeColumn => "three_column",
        OneMoreMixed => "one_more_mixed",
        Complex => "complex",
    }
);

string_enum!(
    Language {
        En => "en",
        Zh => "zh",
        Mixed => "mixed",
    }
);

string_enum!(
    /// Page-level visual degradations; a page may carry several.
    SpecialIssue {
        FuzzyScan => "fuzzy_scan",
        Watermark => "watermark",
        ColorfulBackground => "colorful_background",
    }
);

string_enum!(
    TextBackground {
        White => "white",
        SingleColor => "single_color",
        MultiColor => "multi_color",
    }
);

string_enum!(
    TextRotation {
        Normal => "normal",
        Rotate90 => "rotate90",
        Rotate270 => "rotate270",
        Horizontal => "horizontal",
    }
);

string_enum!(
    TableFrame {
        Full => "full",
        Omission => "omission",
        ThreeLine => "three_line",
        Zero => "zero",
    }
);

string_enum!(
    /// Layout element category. Block-level categories annotate page regions,
    /// span-level categories nest inside blocks, and masked categories mark
    /// regions blanked out of the page image before models ever see them.
    BlockCategory {
        Title => "title",
        TextBlock => "text_block",
        Figure => "figure",
        FigureCaption => "figure_caption",
        FigureFootnote => "figure_footnote",
        Table => "table",
        TableCaption => "table_caption",
        TableFootnote => "table_footnote",
        Header => "header",
        Footer => "footer",
        PageNumber => "page_number",
        PageFootnote => "page_footnote",
        CodeBlock => "code_block",
        CodeBlockCaption => "code_block_caption",
        Reference => "reference",
        EquationIsolated => "equation_isolated",
        TextSpan => "text_span",
        EquationInline => "equation_inline",
        EquationIgnore => "equation_ignore",
        FootnoteMark => "footnote_mark",
        OtherAbandoned => "other_abandoned",
        MaskedTextBlock => "masked_text_block",
        OrganicChemicalFormula => "organic_chemical_formula",
    }
);

impl BlockCategory {
    pub fn is_span_level(self) -> bool {
        matches!(
            self,
            BlockCategory::TextSpan
                | BlockCategory::EquationInline
                | BlockCategory::EquationIgnore
                | BlockCategory::FootnoteMark
        )
    }

    pub fn is_masked(self) -> bool {
        matches!(
            self,
            BlockCategory::OtherAbandoned
                | BlockCategory::MaskedTextBlock
                | BlockCategory::OrganicChemicalFormula
        )
    }

    pub fn is_block_level(self) -> bool {
        !self.is_span_level() && !self.is_masked()
    }

    /// Body categories carry a reading-order index; headers, footers, page
    /// notes, captions, and masked regions do not.
    pub fn carries_order(self) -> bool {
        matches!(
            self,
            BlockCategory::Title
                | BlockCategory::TextBlock
                | BlockCategory::Figure
                | BlockCategory::Table
                | BlockCategory::CodeBlock
                | BlockCategory::Reference
                | BlockCategory::EquationIsolated
        )
    }

    /// Categories that participate in matching but are excluded from metric
    /// calculations: boilerplate handled inconsistently across models.
    pub fn is_default_ignored(self) -> bool {
        matches!(
            self,
            BlockCategory::Header
                | BlockCategory::Footer
                | BlockCategory::PageNumber
                | BlockCategory::PageFootnote
                | BlockCategory::FigureCaption
                | BlockCategory::FigureFootnote
                | BlockCategory::TableCaption
                | BlockCategory::TableFootnote
                | BlockCategory::CodeBlockCaption
        )
    }

    /// Categories whose content joins the pure-text matching pool. Code
    /// blocks are compared as text; tables and display formulas have their
    /// own pools.
    pub fn is_text_bearing(self) -> bool {
        matches!(
            self,
            BlockCategory::Title
                | BlockCategory::TextBlock
                | BlockCategory::CodeBlock
                | BlockCategory::Reference
        ) || self.is_default_ignored()
            || self == BlockCategory::MaskedTextBlock
            || self == BlockCategory::OtherAbandoned
    }
}

/// Axis-aligned rectangle in page pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl From<[f64; 4]> for BBox {
    fn from(v: [f64; 4]) -> Self {
        BBox { x0: v[0], y0: v[1], x1: v[2], y1: v[3] }
    }
}

impl From<BBox> for [f64; 4] {
    fn from(b: BBox) -> Self {
        [b.x0, b.y0, b.x1, b.y1]
    }
}

impl BBox {
    pub fn new(x0: f64, y0: f64, x1: f64, y1: f64) -> Self {
        BBox { x0, y0, x1, y1 }
    }

    pub fn is_well_formed(&self) -> bool {
        self.x0.is_finite()
            && self.y0.is_finite()
            && self.x1.is_finite()
            && self.y1.is_finite()
            && self.x0 < self.x1
            && self.y0 < self.y1
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0).max(0.0) * (self.y1 - self.y0).max(0.0)
    }

    pub fn contains_with_slack(&self, inner: &BBox, slack: f64) -> bool {
        inner.x0 >= self.x0 - slack
            && inner.y0 >= self.y0 - slack
            && inner.x1 <= self.x1 + slack
            && inner.y1 <= self.y1 + slack
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PageAttributes {
    pub pdf_type: PdfType,
    pub layout_type: LayoutType,
    pub language: Language,
    pub special_issues: Vec<SpecialIssue>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TextAttributes {
    pub language: Language,
    pub background: TextBackground,
    pub rotation: TextRotation,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableAttributes {
    pub language: Language,
    pub frame: TableFrame,
    pub merge_cell: bool,
    pub contains_formula: bool,
    pub colorful_background: bool,
    pub rotated: bool,
}

/// Inline unit nested inside a block.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Span {
    pub category: BlockCategory,
    pub bbox: BBox,
    pub content: String,
}

/// A layout element: category, geometry, optional content payload and
/// attributes, reading-order index, and nested spans.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Block {
    pub id: String,
    pub category: BlockCategory,
    pub bbox: BBox,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub content: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub text_attributes: Option<TextAttributes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub table_attributes: Option<TableAttributes>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub affiliation: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub spans: Vec<Span>,
}

impl Block {
    /// Minimal block with just id, category, and bbox; the rest defaults.
    pub fn new(id: impl Into<String>, category: BlockCategory, bbox: BBox) -> Self {
        Block {
            id: id.into(),
            category,
            bbox,
            content: None,
            text_attributes: None,
            table_attributes: None,
            order: None,
            affiliation: None,
            spans: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthPage {
    pub page_id: String,
    pub attributes: PageAttributes,
    pub blocks: Vec<Block>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct Dataset {
    pub pages: Vec<GroundTruthPage>,
}

impl Dataset {
    pub fn page(&self, page_id: &str) -> Option<&GroundTruthPage> {
        self.pages.iter().find(|p| p.page_id == page_id)
    }
}

// ---------------------------------------------------------------------------
// Parsing
//
// The on-disk format is JSON. Parsing goes through a raw mirror with string
// fields so that unknown category/attribute strings can be reported with the
// page and block they appear in rather than a bare serde error.
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct RawPage {
    page_id: String,
    attributes: RawPageAttributes,
    blocks: Vec<RawBlock>,
}

#[derive(Deserialize)]
struct RawPageAttributes {
    pdf_type: String,
    layout_type: String,
    language: String,
    #[serde(default)]
    special_issues: Vec<String>,
}

#[derive(Deserialize)]
struct RawBlock {
    id: String,
    category: String,
    bbox: [f64; 4],
    #[serde(default)]
    content: Option<String>,
    #[serde(default)]
    text_attributes: Option<RawTextAttributes>,
    #[serde(default)]
    table_attributes: Option<RawTableAttributes>,
    #[serde(default)]
    order: Option<u32>,
    #[serde(default)]
    affiliation: Option<String>,
    #[serde(default)]
    spans: Vec<RawSpan>,
}

#[derive(Deserialize)]
struct RawTextAttributes {
    language: String,
    background: String,
    rotation: String,
}

#[derive(Deserialize)]
struct RawTableAttributes {
    language: String,
    frame: String,
    #[serde(default)]
    merge_cell: bool,
    #[serde(default)]
    contains_formula: bool,
    #[serde(default)]
    colorful_background: bool,
    #[serde(default)]
    rotated: bool,
}

#[derive(Deserialize)]
struct RawSpan {
    category: String,
    bbox: [f64; 4],
    content: String,
}

fn parse_field<T: FromStr<Err = String>>(
    value: &str,
    page_id: &str,
    block_id: Option<&str>,
) -> Result<T> {
    value
        .parse::<T>()
        .map_err(|msg| EvalError::schema(page_id, block_id, msg))
}

fn convert_page(raw: RawPage) -> Result<GroundTruthPage> {
    let pid = raw.page_id.as_str();
    let attributes = PageAttributes {
        pdf_type: parse_field(&raw.attributes.pdf_type, pid, None)?,
        layout_type: parse_field(&raw.attributes.layout_type, pid, None)?,
        language: parse_field(&raw.attributes.language, pid, None)?,
        special_issues: raw
            .attributes
            .special_issues
            .iter()
            .map(|s| parse_field(s, pid, None))
            .collect::<Result<Vec<_>>>()?,
    };
    let blocks = raw
        .blocks
        .into_iter()
        .map(|b| convert_block(b, pid))
        .collect::<Result<Vec<_>>>()?;
    Ok(GroundTruthPage { page_id: raw.page_id, attributes, blocks })
}

fn convert_block(raw: RawBlock, page_id: &str) -> Result<Block> {
    let bid = Some(raw.id.as_str());
    let category = parse_field(&raw.category, page_id, bid)?;
    let text_attributes = raw
        .text_attributes
        .map(|t| {
            Ok(TextAttributes {
                language: parse_field(&t.language, page_id, bid)?,
                background: parse_field(&t.background, page_id, bid)?,
                rotation: parse_field(&t.rotation, page_id, bid)?,
            })
        })
        .transpose()?;
    let table_attributes = raw
        .table_attributes
        .map(|t| {
            Ok(TableAttributes {
                language: parse_field(&t.language, page_id, bid)?,
                frame: parse_field(&t.frame, page_id, bid)?,
                merge_cell: t.merge_cell,
                contains_formula: t.contains_formula,
                colorful_background: t.colorful_background,
                rotated: t.rotated,
            })
        })
        .transpose()?;
    let spans = raw
        .spans
        .into_iter()
        .map(|s| {
            Ok(Span {
                category: parse_field(&s.category, page_id, bid)?,
                bbox: s.bbox.into(),
                content: s.content,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Block {
        id: raw.id,
        category,
        bbox: raw.bbox.into(),
        content: raw.content,
        text_attributes,
        table_attributes,
        order: raw.order,
        affiliation: raw.affiliation,
        spans,
    })
}

/// Parse a ground-truth file without enforcing dataset invariants. Unknown
/// category or attribute strings and structural JSON problems are errors;
/// invariant violations are left for [`validate`] to report.
pub fn parse_dataset(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| EvalError::Io { path: path.to_owned(), source })?;
    let raw: Vec<RawPage> = serde_json::from_str(&text)
        .map_err(|source| EvalError::Json { path: path.to_owned(), source })?;
    let pages = raw.into_iter().map(convert_page).collect::<Result<Vec<_>>>()?;
    Ok(Dataset { pages })
}

/// Load a ground-truth file and enforce every dataset invariant. Any finding
/// reported by [`validate`], warning or error, rejects the file.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let dataset = parse_dataset(path)?;
    let report = validate(&dataset);
    if let Some(f) = report.findings.first() {
        return Err(EvalError::schema(&f.page_id, f.block_id.as_deref(), &f.message));
    }
    Ok(dataset)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub page_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub block_id: Option<String>,
    pub message: String,
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] page {}{}: {}",
            match self.severity {
                Severity::Warning => "warning",
                Severity::Error => "error",
            },
            self.page_id,
            self.block_id.as_deref().map(|b| format!(" block {b}")).unwrap_or_default(),
            self.message
        )
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.findings.is_empty()
    }
}

struct FindingSink<'a> {
    page_id: &'a str,
    findings: Vec<Finding>,
}

impl<'a> FindingSink<'a> {
    fn push(&mut self, severity: Severity, block_id: Option<&str>, message: String) {
        self.findings.push(Finding {
            severity,
            page_id: self.page_id.to_owned(),
            block_id: block_id.map(str::to_owned),
            message,
        });
    }
}

/// Check every dataset invariant and report findings instead of failing.
pub fn validate(dataset: &Dataset) -> ValidationReport {
    let mut findings = Vec::new();

    let mut seen_pages = HashSet::new();
    for page in &dataset.pages {
        if !seen_pages.insert(page.page_id.as_str()) {
            findings.push(Finding {
                severity: Severity::Error,
                page_id: page.page_id.clone(),
                block_id: None,
                message: "duplicate page_id".to_owned(),
            });
        }
        let mut sink = FindingSink { page_id: &page.page_id, findings: Vec::new() };
        validate_page(page, &mut sink);
        findings.extend(sink.findings);
    }

    ValidationReport { findings }
}

fn validate_page(page: &GroundTruthPage, sink: &mut FindingSink) {
    let ids: HashSet<&str> = page.blocks.iter().map(|b| b.id.as_str()).collect();
    if ids.len() != page.blocks.len() {
        let mut seen = HashSet::new();
        for b in &page.blocks {
            if !seen.insert(b.id.as_str()) {
                sink.push(Severity::Error, Some(&b.id), "duplicate block id".to_owned());
            }
        }
    }

    let mut orders = Vec::new();
    for block in &page.blocks {
        let bid = Some(block.id.as_str());
        if !block.bbox.is_well_formed() {
            sink.push(Severity::Error, bid, "bbox is not a well-formed rectangle".to_owned());
        }
        if block.category.is_span_level() {
            sink.push(
                Severity::Error,
                bid,
                format!("span-level category {} used at block level", block.category),
            );
        }
        match (block.category == BlockCategory::Table, block.table_attributes.is_some()) {
            (true, false) => sink.push(
                Severity::Error,
                bid,
                "table block is missing table_attributes".to_owned(),
            ),
            (false, true) => sink.push(
                Severity::Error,
                bid,
                format!("table_attributes present on non-table category {}", block.category),
            ),
            _ => {}
        }
        match (block.category.carries_order(), block.order) {
            (true, None) => sink.push(
                Severity::Error,
                bid,
                format!("body category {} is missing a reading-order index", block.category),
            ),
            (false, Some(o)) => sink.push(
                Severity::Error,
                bid,
                format!("category {} must not carry a reading-order index (found {o})", block.category),
            ),
            _ => {}
        }
        if let Some(o) = block.order {
            orders.push((o, block.id.as_str()));
        }
        if let Some(aff) = &block.affiliation {
            if !ids.contains(aff.as_str()) {
                sink.push(
                    Severity::Error,
                    bid,
                    format!("affiliation references missing block id {aff:?}"),
                );
            }
        }
        if block.category.carries_order()
            && block.category != BlockCategory::Figure
            && block.content.is_none()
        {
            sink.push(
                Severity::Warning,
                bid,
                format!("ordered {} block has no content payload", block.category),
            );
        }
        for span in &block.spans {
            if !span.category.is_span_level() {
                sink.push(
                    Severity::Error,
                    bid,
                    format!("nested span uses non-span category {}", span.category),
                );
            }
            if !span.bbox.is_well_formed() {
                sink.push(Severity::Error, bid, "span bbox is not well-formed".to_owned());
            } else if !block.bbox.contains_with_slack(&span.bbox, SPAN_CONTAINMENT_SLACK) {
                sink.push(
                    Severity::Warning,
                    bid,
                    format!(
                        "span bbox extends outside parent block by more than {SPAN_CONTAINMENT_SLACK} px"
                    ),
                );
            }
        }
    }

    orders.sort_unstable();
    for pair in orders.windows(2) {
        if pair[0].0 == pair[1].0 {
            sink.push(
                Severity::Error,
                Some(pair[1].1),
                format!("duplicate reading-order index {}", pair[0].0),
            );
        }
    }
    let deduped: Vec<u32> = {
        let mut v: Vec<u32> = orders.iter().map(|(o, _)| *o).collect();
        v.dedup();
        v
    };
    if !deduped.is_empty() && (deduped[0] != 0 || *deduped.last().unwrap() as usize != deduped.len() - 1)
    {
        sink.push(
            Severity::Error,
            None,
            format!(
                "reading-order indices must form 0..{} after sorting, found {:?}",
                deduped.len() - 1,
                deduped
            ),
        );
    }
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Tabulations over pages, blocks, and attribute values.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StatsReport {
    pub total_pages: usize,
    pub total_blocks: usize,
    pub total_spans: usize,
    pub pages_by_pdf_type: BTreeMap<String, usize>,
    pub pages_by_layout_type: BTreeMap<String, usize>,
    pub pages_by_language: BTreeMap<String, usize>,
    pub pages_by_special_issue: BTreeMap<String, usize>,
    pub blocks_by_category: BTreeMap<String, usize>,
    pub spans_by_category: BTreeMap<String, usize>,
    pub text_blocks_by_language: BTreeMap<String, usize>,
    pub text_blocks_by_background: BTreeMap<String, usize>,
    pub text_blocks_by_rotation: BTreeMap<String, usize>,
    pub tables_by_language: BTreeMap<String, usize>,
    pub tables_by_frame: BTreeMap<String, usize>,
    pub tables_by_special_issue: BTreeMap<String, usize>,
}

fn bump(map: &mut BTreeMap<String, usize>, key: &str) {
    *map.entry(key.to_owned()).or_insert(0) += 1;
}

/// Count pages per attribute value and blocks per category and attribute
/// value, mirroring the dataset's published summary tables.
pub fn dataset_stats(dataset: &Dataset) -> StatsReport {
    let mut s = StatsReport { total_pages: dataset.pages.len(), ..Default::default() };
    for page in &dataset.pages {
        bump(&mut s.pages_by_pdf_type, page.attributes.pdf_type.as_str());
        bump(&mut s.pages_by_layout_type, page.attributes.layout_type.as_str());
        bump(&mut s.pages_by_language, page.attributes.language.as_str());
        for issue in &page.attributes.special_issues {
            bump(&mut s.pages_by_special_issue, issue.as_str());
        }
        for block in &page.blocks {
            s.total_blocks += 1;
            bump(&mut s.blocks_by_category, block.category.as_str());
            if let Some(t) = &block.text_attributes {
                bump(&mut s.text_blocks_by_language, t.language.as_str());
                bump(&mut s.text_blocks_by_background, t.background.as_str());
                bump(&mut s.text_blocks_by_rotation, t.rotation.as_str());
            }
            if let Some(t) = &block.table_attributes {
                bump(&mut s.tables_by_language, t.language.as_str());
                bump(&mut s.tables_by_frame, t.frame.as_str());
                if t.merge_cell {
                    bump(&mut s.tables_by_special_issue, "merge_cell");
                }
                if t.contains_formula {
                    bump(&mut s.tables_by_special_issue, "contains_formula");
                }
                if t.colorful_background {
                    bump(&mut s.tables_by_special_issue, "colorful_background");
                }
                if t.rotated {
                    bump(&mut s.tables_by_special_issue, "rotated");
                }
            }
            for span in &block.spans {
                s.total_spans += 1;
                bump(&mut s.spans_by_category, span.category.as_str());
            }
        }
    }
    s
}

// ---------------------------------------------------------------------------
// Canonical markdown serialization
// ---------------------------------------------------------------------------

/// Serialize a page's body blocks to markdown in reading order: text-bearing
/// blocks as paragraphs, display formulas as `$$...$$`, tables as their HTML
/// payload, code blocks fenced. Ignored and masked categories are omitted;
/// figures are skipped.
pub fn gt_page_to_markdown(page: &GroundTruthPage) -> Result<String> {
    let mut body: Vec<&Block> = page.blocks.iter().filter(|b| b.order.is_some()).collect();
    body.sort_by_key(|b| b.order.unwrap());

    let mut chunks = Vec::new();
    for block in body {
        if block.category == BlockCategory::Figure {
            continue;
        }
        let content = block
            .content
            .as_deref()
            .ok_or_else(|| EvalError::MissingContent { block_id: block.id.clone() })?;
        match block.category {
            BlockCategory::EquationIsolated => chunks.push(format!("$${content}$$")),
            BlockCategory::Table => chunks.push(content.to_owned()),
            BlockCategory::CodeBlock => chunks.push(format!("```\n{content}\n```")),
            _ => chunks.push(content.to_owned()),
        }
    }
    Ok(chunks.join("\n\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn text_block(id: &str, order: u32, content: &str) -> Block {
        Block {
            content: Some(content.to_owned()),
            order: Some(order),
            ..Block::new(id, BlockCategory::TextBlock, BBox::new(0.0, 0.0, 100.0, 20.0))
        }
    }

    fn one_page(blocks: Vec<Block>) -> GroundTruthPage {
        GroundTruthPage {
            page_id: "page_000".to_owned(),
            attributes: PageAttributes {
                pdf_type: PdfType::Book,
                layout_type: LayoutType::SingleColumn,
                language: Language::En,
                special_issues: vec![],
            },
            blocks,
        }
    }

    #[test]
    fn loads_minimal_valid_file() {
        let json = r#"[{
            "page_id": "p1",
            "attributes": {"pdf_type": "book", "layout_type": "single_column",
                           "language": "en", "special_issues": []},
            "blocks": [{"id": "b0", "category": "text_block",
                        "bbox": [0, 0, 10, 10], "content": "hello", "order": 0}]
        }]"#;
        let dir = std::env::temp_dir().join("doceval_annot_min");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("gt.json");
        std::fs::write(&path, json).unwrap();
        let ds = load_dataset(&path).unwrap();
        assert_eq!(ds.pages.len(), 1);
        assert_eq!(ds.pages[0].blocks.len(), 1);
        assert_eq!(ds.pages[0].blocks[0].content.as_deref(), Some("hello"));
    }

    #[test]
    fn duplicate_order_is_a_load_error() {
        let json = r#"[{
            "page_id": "p1",
            "attributes": {"pdf_type": "book", "layout_type": "single_column",
                           "language": "en", "special_issues": []},
            "blocks": [
                {"id": "a", "category": "text_block", "bbox": [0,0,10,10], "content": "x", "order": 3},
                {"id": "b", "category": "text_block", "bbox": [0,20,10,30], "content": "y", "order": 3}
            ]
        }]"#;
        let dir = std::env::temp_dir().join("doceval_annot_dup");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("gt.json");
        std::fs::write(&path, json).unwrap();
        let err = load_dataset(&path).unwrap_err();
        assert!(err.to_string().contains("duplicate reading-order index 3"), "{err}");
    }

    #[test]
    fn table_without_attributes_is_schema_error_naming_the_block() {
        let mut table = Block::new("t9", BlockCategory::Table, BBox::new(0.0, 0.0, 50.0, 50.0));
        table.content = Some("<table><tr><td>x</td></tr></table>".to_owned());
        table.order = Some(0);
        let report = validate(&Dataset { pages: vec![one_page(vec![table])] });
        assert_eq!(report.findings.len(), 1);
        let f = &report.findings[0];
        assert_eq!(f.severity, Severity::Error);
        assert_eq!(f.block_id.as_deref(), Some("t9"));
        assert!(f.message.contains("table_attributes"));
    }

    #[test]
    fn unknown_category_string_is_schema_error() {
        let json = r#"[{
            "page_id": "p1",
            "attributes": {"pdf_type": "book", "layout_type": "single_column",
                           "language": "en", "special_issues": []},
            "blocks": [{"id": "b0", "category": "paragraph", "bbox": [0,0,10,10]}]
        }]"#;
        let dir = std::env::temp_dir().join("doceval_annot_cat");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("gt.json");
        std::fs::write(&path, json).unwrap();
        let err = parse_dataset(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("p1") && msg.contains("b0") && msg.contains("paragraph"), "{msg}");
    }

    #[test]
    fn span_outside_parent_is_containment_finding() {
        let mut block = text_block("b0", 0, "body");
        block.spans.push(Span {
            category: BlockCategory::TextSpan,
            bbox: BBox::new(0.0, 0.0, 110.0, 20.0), // 10 px past the parent
            content: "body".to_owned(),
        });
        let report = validate(&Dataset { pages: vec![one_page(vec![block])] });
        assert_eq!(report.findings.len(), 1);
        assert_eq!(report.findings[0].severity, Severity::Warning);
        assert!(report.findings[0].message.contains("outside parent"));
    }

    #[test]
    fn span_within_slack_is_clean() {
        let mut block = text_block("b0", 0, "body");
        block.spans.push(Span {
            category: BlockCategory::TextSpan,
            bbox: BBox::new(-1.5, 0.0, 101.0, 21.9),
            content: "body".to_owned(),
        });
        let report = validate(&Dataset { pages: vec![one_page(vec![block])] });
        assert!(report.is_clean(), "{:?}", report.findings);
    }

    #[test]
    fn dangling_affiliation_is_finding() {
        let mut caption = Block::new("c0", BlockCategory::FigureCaption, BBox::new(0.0, 0.0, 10.0, 10.0));
        caption.content = Some("Figure 1".to_owned());
        caption.affiliation = Some("missing".to_owned());
        let report = validate(&Dataset { pages: vec![one_page(vec![caption])] });
        assert_eq!(report.findings.len(), 1);
        assert!(report.findings[0].message.contains("missing block id"));
    }

    #[test]
    fn stats_empty_dataset_all_zero() {
        let s = dataset_stats(&Dataset::default());
        assert_eq!(s.total_pages, 0);
        assert_eq!(s.total_blocks, 0);
        assert!(s.pages_by_pdf_type.is_empty());
    }

    #[test]
    fn stats_sum_to_totals() {
        let ds = crate::fixtures::corpus(12, 7);
        let s = dataset_stats(&ds.dataset);
        assert_eq!(s.pages_by_pdf_type.values().sum::<usize>(), s.total_pages);
        assert_eq!(s.blocks_by_category.values().sum::<usize>(), s.total_blocks);
        assert_eq!(s.spans_by_category.values().sum::<usize>(), s.total_spans);
    }

    #[test]
    fn markdown_single_text_block() {
        let page = one_page(vec![text_block("b0", 0, "abc")]);
        assert_eq!(gt_page_to_markdown(&page).unwrap(), "abc");
    }

    #[test]
    fn markdown_text_then_formula() {
        let mut formula = Block::new("f0", BlockCategory::EquationIsolated, BBox::new(0.0, 30.0, 100.0, 50.0));
        formula.content = Some("E=mc^2".to_owned());
        formula.order = Some(1);
        let page = one_page(vec![text_block("b0", 0, "a"), formula]);
        assert_eq!(gt_page_to_markdown(&page).unwrap(), "a\n\n$$E=mc^2$$");
    }

    #[test]
    fn markdown_header_only_page_is_empty() {
        let mut header = Block::new("h0", BlockCategory::Header, BBox::new(0.0, 0.0, 100.0, 10.0));
        header.content = Some("Chapter 1".to_owned());
        let page = one_page(vec![header]);
        assert_eq!(gt_page_to_markdown(&page).unwrap(), "");
    }

    #[test]
    fn markdown_ordered_block_without_content_errors() {
        let mut block = Block::new("b0", BlockCategory::TextBlock, BBox::new(0.0, 0.0, 10.0, 10.0));
        block.order = Some(0);
        let page = one_page(vec![block]);
        assert!(matches!(gt_page_to_markdown(&page), Err(EvalError::MissingContent { .. })));
    }

    #[test]
    fn category_partitions_are_disjoint_and_total() {
        for &cat in BlockCategory::ALL {
            let kinds =
                [cat.is_block_level(), cat.is_span_level(), cat.is_masked()].iter().filter(|&&b| b).count();
            assert_eq!(kinds, 1, "{cat} must be exactly one of block/span/masked");
        }
        assert_eq!(BlockCategory::ALL.len(), 23);
    }
}
