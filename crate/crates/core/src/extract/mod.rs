//! Extraction of typed elements from predicted markdown.
//!
//! The raw model output is first preprocessed (images removed, a leading
//! fence wrapper stripped, repeated characters capped), then elements are
//! pulled out by pattern matching in a fixed order: LaTeX tables, HTML
//! tables, display formulas, markdown tables (converted to HTML), and code
//! blocks. Every extraction replaces the matched region with same-length
//! blanks so that the recorded source spans — byte offsets into the
//! preprocessed markdown — stay valid without remapping. What remains is
//! split into text paragraphs; code blocks join them, since models disagree
//! too much on code fencing for a separate category to be fair.

mod tables;
mod unicode;

pub use tables::markdown_table_to_html;
pub use unicode::inline_formula_to_unicode;

use std::sync::LazyLock;

use regex::Regex;
use serde::Serialize;

/// Default cap on runs of one identical character.
pub const DEFAULT_REPEAT_CAP: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    TextParagraph,
    DisplayFormula,
    TableHtml,
    CodeBlock,
}

/// One extracted element with its source span (byte offsets into the
/// preprocessed markdown, `start < end`, pairwise disjoint across elements).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractedElement {
    pub kind: ElementKind,
    pub content: String,
    pub start: usize,
    pub end: usize,
}

/// Counts of elements found per kind. Code blocks are tallied here even
/// though they are re-classified as text paragraphs for matching.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ExtractStats {
    pub text_paragraphs: usize,
    pub display_formulas: usize,
    pub tables: usize,
    pub code_blocks: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ExtractedDoc {
    /// Elements sorted ascending by start offset.
    pub elements: Vec<ExtractedElement>,
    pub stats: ExtractStats,
    pub warnings: Vec<String>,
}

impl ExtractedDoc {
    pub fn of_kind(&self, kind: ElementKind) -> impl Iterator<Item = &ExtractedElement> {
        self.elements.iter().filter(move |e| e.kind == kind)
    }
}

static IMAGE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"!\[[^\]]*\]\([^)]*\)").unwrap());
static LATEX_TABLE_RE: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?s)\\begin\{table\*?\}.*?\\end\{table\*?\}|\\begin\{tabular\}.*?\\end\{tabular\}")
        .unwrap()
});
static HTML_TABLE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?is)<table\b.*?</table\s*>").unwrap());
static MATH_FENCE_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?ms)^```math[ \t]*$(.*?)^```[ \t]*$").unwrap());
static DOLLAR_DISPLAY_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)\$\$(.*?)\$\$").unwrap());
static BRACKET_DISPLAY_RE: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)\\\[(.*?)\\\]").unwrap());

/// Preprocess raw model markdown with the default repeated-character cap.
pub fn preprocess(markdown: &str) -> String {
    preprocess_with(markdown, DEFAULT_REPEAT_CAP)
}

/// Remove image references, strip a leading fence wrapper and leading
/// horizontal rules, and truncate any run of one identical character longer
/// than `repeat_cap`.
pub fn preprocess_with(markdown: &str, repeat_cap: usize) -> String {
    let text = IMAGE_RE.replace_all(markdown, "");
    let text = strip_leading_wrapper(&text);
    cap_repeats(&text, repeat_cap)
}

fn strip_leading_wrapper(text: &str) -> String {
    let mut text = text;

    // An opening ```markdown / ```md fence wrapping the whole document.
    let first_line_end = text.find('\n').unwrap_or(text.len());
    let first_line = text[..first_line_end].trim_end();
    if let Some(info) = first_line.strip_prefix("```") {
        if matches!(info.trim().to_ascii_lowercase().as_str(), "markdown" | "md") {
            text = text.get(first_line_end + 1..).unwrap_or("");
            // Drop the matching closing fence when it is the last line.
            let tail = text.trim_end();
            if let Some(rest) = tail.strip_suffix("```") {
                if rest.is_empty() || rest.ends_with('\n') {
                    text = rest.strip_suffix('\n').unwrap_or(rest);
                }
            }
        }
    }

    // Leading horizontal rules. Long dash runs are left for the
    // repeated-character cap rather than treated as front matter.
    let mut out = text;
    loop {
        let line_end = out.find('\n').map(|e| e + 1).unwrap_or(out.len());
        let line = out[..line_end].trim();
        let is_rule = (3..=10).contains(&line.len())
            && (line.chars().all(|c| c == '-')
                || line.chars().all(|c| c == '*')
                || line.chars().all(|c| c == '_'));
        if is_rule {
            out = &out[line_end..];
        } else {
            break;
        }
    }
    out.to_owned()
}

fn cap_repeats(text: &str, cap: usize) -> String {
    let cap = cap.max(1);
    let mut out = String::with_capacity(text.len().min(1 << 20));
    let mut run_char = None;
    let mut run_len = 0usize;
    for c in text.chars() {
        if Some(c) == run_char {
            run_len += 1;
        } else {
            run_char = Some(c);
            run_len = 1;
        }
        if run_len <= cap {
            out.push(c);
        }
    }
    out
}

/// Consumed byte ranges of the working buffer, kept sorted and disjoint.
/// Later extraction passes must not claim a region that covers an earlier
/// match's placeholder, and paragraph spans split around the holes.
#[derive(Default)]
struct ConsumedMask {
    intervals: Vec<(usize, usize)>,
}

impl ConsumedMask {
    fn overlaps(&self, start: usize, end: usize) -> bool {
        self.intervals.iter().any(|&(s, e)| start < e && s < end)
    }

    fn insert(&mut self, start: usize, end: usize) {
        let at = self.intervals.partition_point(|&(s, _)| s < start);
        self.intervals.insert(at, (start, end));
    }

    /// Pieces of `[start, end)` not covered by any consumed interval.
    fn subtract(&self, start: usize, end: usize) -> Vec<(usize, usize)> {
        let mut pieces = Vec::new();
        let mut cursor = start;
        for &(s, e) in &self.intervals {
            if e <= cursor || s >= end {
                continue;
            }
            if s > cursor {
                pieces.push((cursor, s));
            }
            cursor = cursor.max(e);
        }
        if cursor < end {
            pieces.push((cursor, end));
        }
        pieces
    }
}

/// Replace `range` in `work` with spaces, preserving byte length.
fn blank_out(work: &mut String, start: usize, end: usize) {
    work.replace_range(start..end, &" ".repeat(end - start));
}

/// Extract typed elements from preprocessed markdown.
pub fn extract_elements(markdown: &str) -> ExtractedDoc {
    let mut work = markdown.to_owned();
    let mut mask = ConsumedMask::default();
    let mut elements = Vec::new();
    let mut warnings = Vec::new();
    let mut stats = ExtractStats::default();

    let claim = |work: &mut String,
                     mask: &mut ConsumedMask,
                     elements: &mut Vec<ExtractedElement>,
                     kind: ElementKind,
                     content: String,
                     start: usize,
                     end: usize| {
        if mask.overlaps(start, end) {
            return false;
        }
        elements.push(ExtractedElement { kind, content, start, end });
        mask.insert(start, end);
        blank_out(work, start, end);
        true
    };

    // 1. LaTeX tables. Kept verbatim: the table metrics expect HTML and will
    //    score an unconverted LaTeX payload accordingly.
    for (start, end) in find_all(&LATEX_TABLE_RE, &work) {
        let content = work[start..end].trim().to_owned();
        if claim(&mut work, &mut mask, &mut elements, ElementKind::TableHtml, content, start, end) {
            stats.tables += 1;
        }
    }

    // 2. HTML tables.
    for (start, end) in find_all(&HTML_TABLE_RE, &work) {
        let content = work[start..end].trim().to_owned();
        if claim(&mut work, &mut mask, &mut elements, ElementKind::TableHtml, content, start, end) {
            stats.tables += 1;
        }
    }

    // 3. Display formulas: ```math fences, then $$...$$, then \[...\].
    for re in [&*MATH_FENCE_RE, &*DOLLAR_DISPLAY_RE, &*BRACKET_DISPLAY_RE] {
        for (start, end) in find_all(re, &work) {
            let inner = re
                .captures(&work[start..end])
                .and_then(|c| c.get(1))
                .map(|m| m.as_str())
                .unwrap_or("")
                .trim()
                .to_owned();
            if claim(&mut work, &mut mask, &mut elements, ElementKind::DisplayFormula, inner, start, end)
            {
                stats.display_formulas += 1;
            }
        }
    }

    // 4. Markdown tables, converted to HTML.
    for region in tables::find_markdown_tables(&work) {
        if mask.overlaps(region.0, region.1) {
            continue;
        }
        match markdown_table_to_html(&work[region.0..region.1]) {
            Ok(html) => {
                if claim(&mut work, &mut mask, &mut elements, ElementKind::TableHtml, html, region.0, region.1)
                {
                    stats.tables += 1;
                }
            }
            Err(e) => warnings.push(format!("markdown table left in text: {e}")),
        }
    }

    // 5. Code blocks; merged into the text category for matching.
    for (start, end, content) in find_code_blocks(&work, &mut warnings) {
        if claim(&mut work, &mut mask, &mut elements, ElementKind::TextParagraph, content, start, end) {
            stats.code_blocks += 1;
        }
    }

    check_leftover_delimiters(&work, &mut warnings);

    // 6. Pure text: the residual splits into paragraphs, further divided
    //    around the holes left by earlier extractions.
    for (lo, hi) in split_paragraph_spans(&work) {
        for (start, end) in mask.subtract(lo, hi) {
            let Some((start, end)) = trim_span(&work, start, end) else { continue };
            let collapsed = collapse_ws(&work[start..end]);
            if collapsed.is_empty() {
                continue;
            }
            elements.push(ExtractedElement {
                kind: ElementKind::TextParagraph,
                content: inline_formula_to_unicode(&collapsed),
                start,
                end,
            });
            stats.text_paragraphs += 1;
        }
    }

    elements.sort_by_key(|e| e.start);
    ExtractedDoc { elements, stats, warnings }
}

fn find_all(re: &Regex, text: &str) -> Vec<(usize, usize)> {
    re.find_iter(text).map(|m| (m.start(), m.end())).collect()
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn find_code_blocks(work: &str, warnings: &mut Vec<String>) -> Vec<(usize, usize, String)> {
    let mut blocks = Vec::new();
    let mut lines = line_spans(work);
    let mut i = 0;
    while i < lines.len() {
        let (lo, hi) = lines[i];
        let line = work[lo..hi].trim_end();
        let trimmed = line.trim_start();
        let ticks = trimmed.chars().take_while(|&c| c == '`').count();
        if ticks >= 3 && line.len() - trimmed.len() <= 3 {
            // Opening fence; find a closing fence with at least as many ticks.
            let mut close = None;
            for (j, &(clo, chi)) in lines.iter().enumerate().skip(i + 1) {
                let cline = work[clo..chi].trim();
                if cline.len() >= ticks && cline.chars().all(|c| c == '`') {
                    close = Some(j);
                    break;
                }
            }
            match close {
                Some(j) => {
                    let content_start = lines[i].1;
                    let content_end = lines[j].0;
                    let content = work
                        .get(content_start..content_end)
                        .unwrap_or("")
                        .trim_end()
                        .to_owned();
                    blocks.push((lo, lines[j].1, content));
                    i = j + 1;
                    continue;
                }
                None => {
                    warnings.push("unclosed code fence left in text".to_owned());
                }
            }
        }
        i += 1;
    }
    lines.clear();
    blocks
}

/// Byte spans of each line, including its trailing newline.
fn line_spans(text: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = 0;
    for (i, b) in text.bytes().enumerate() {
        if b == b'\n' {
            spans.push((start, i + 1));
            start = i + 1;
        }
    }
    if start < text.len() {
        spans.push((start, text.len()));
    }
    spans
}

fn check_leftover_delimiters(work: &str, warnings: &mut Vec<String>) {
    for (needle, what) in [
        ("\\begin{table", "latex table"),
        ("\\begin{tabular", "latex table"),
        ("<table", "html table"),
        ("$$", "display formula"),
    ] {
        if work.contains(needle) {
            warnings.push(format!("unbalanced {what} delimiter left in text"));
        }
    }
}

/// Paragraph spans of extraction residue: split on blank lines, or on single
/// line breaks when the whole residual has no blank line. Whitespace-only
/// fragments are dropped.
fn split_paragraph_spans(residual: &str) -> Vec<(usize, usize)> {
    let lines = line_spans(residual);
    let has_blank = lines.iter().any(|&(lo, hi)| residual[lo..hi].trim().is_empty());
    let mut spans = Vec::new();
    if has_blank || lines.len() <= 1 {
        let mut current: Option<(usize, usize)> = None;
        for &(lo, hi) in &lines {
            if residual[lo..hi].trim().is_empty() {
                if let Some(span) = current.take() {
                    spans.push(span);
                }
            } else {
                current = Some(match current {
                    Some((s, _)) => (s, hi),
                    None => (lo, hi),
                });
            }
        }
        if let Some(span) = current {
            spans.push(span);
        }
    } else {
        spans.extend(lines);
    }
    spans
        .into_iter()
        .filter_map(|(lo, hi)| trim_span(residual, lo, hi))
        .collect()
}

/// Shrink a span to exclude leading/trailing whitespace; None if empty.
fn trim_span(text: &str, lo: usize, hi: usize) -> Option<(usize, usize)> {
    let slice = &text[lo..hi];
    let start_trim = slice.len() - slice.trim_start().len();
    let end_trim = slice.trim_end().len();
    if start_trim >= end_trim {
        return None;
    }
    Some((lo + start_trim, lo + end_trim))
}

/// Split extraction residue into paragraph texts (the span-free view of the
/// logic used by [`extract_elements`]).
pub fn split_paragraphs(residual: &str) -> Vec<String> {
    split_paragraph_spans(residual)
        .into_iter()
        .map(|(lo, hi)| residual[lo..hi].to_owned())
        .collect()
}
