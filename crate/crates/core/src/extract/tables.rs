//! Markdown pipe-table detection and conversion to HTML.
//!
//! The header row is emitted as plain `td` cells so that downstream tree
//! comparison measures structure and content rather than header styling.

use crate::error::{EvalError, Result};

/// Split a pipe-table row into trimmed cell texts, honoring `\|` escapes.
fn split_row(line: &str) -> Vec<String> {
    let mut cells = Vec::new();
    let mut current = String::new();
    let mut chars = line.trim().chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '\\' if chars.peek() == Some(&'|') => {
                current.push('|');
                chars.next();
            }
            '|' => {
                cells.push(current.trim().to_owned());
                current = String::new();
            }
            _ => current.push(c),
        }
    }
    cells.push(current.trim().to_owned());
    // Boundary pipes produce empty leading/trailing cells; drop them.
    if cells.first().is_some_and(|c| c.is_empty()) {
        cells.remove(0);
    }
    if cells.last().is_some_and(|c| c.is_empty()) {
        cells.pop();
    }
    cells
}

fn is_delimiter_cell(cell: &str) -> bool {
    let body = cell.strip_prefix(':').unwrap_or(cell);
    let body = body.strip_suffix(':').unwrap_or(body);
    !body.is_empty() && body.chars().all(|c| c == '-')
}

fn is_delimiter_row(line: &str) -> bool {
    let cells = split_row(line);
    !cells.is_empty() && cells.iter().all(|c| is_delimiter_cell(c))
}

fn looks_like_row(line: &str) -> bool {
    let trimmed = line.trim();
    !trimmed.is_empty() && trimmed.contains('|')
}

/// Byte regions of pipe tables in `text`: a row line followed by a delimiter
/// row, then any run of further row lines.
pub(super) fn find_markdown_tables(text: &str) -> Vec<(usize, usize)> {
    let mut regions = Vec::new();
    let lines: Vec<(usize, usize)> = {
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
    };
    let line_text = |&(lo, hi): &(usize, usize)| text[lo..hi].trim_end_matches('\n');

    let mut i = 0;
    while i + 1 < lines.len() {
        if looks_like_row(line_text(&lines[i])) && is_delimiter_row(line_text(&lines[i + 1])) {
            let start = lines[i].0;
            let mut j = i + 2;
            while j < lines.len() && looks_like_row(line_text(&lines[j])) && !is_delimiter_row(line_text(&lines[j])) {
                j += 1;
            }
            let end = lines[j - 1].1;
            regions.push((start, end));
            i = j;
        } else {
            i += 1;
        }
    }
    regions
}

fn escape_html(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Convert one markdown pipe table to flat HTML (`td` cells only). Rows
/// shorter than the header are padded with empty cells.
pub fn markdown_table_to_html(md_table: &str) -> Result<String> {
    let lines: Vec<&str> = md_table.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() < 2 {
        return Err(EvalError::MalformedTable {
            line: lines.len(),
            message: "a pipe table needs a header row and a delimiter row".to_owned(),
        });
    }
    if !is_delimiter_row(lines[1]) {
        return Err(EvalError::MalformedTable {
            line: 2,
            message: format!("not a delimiter row: {:?}", lines[1].trim()),
        });
    }
    let header = split_row(lines[0]);
    let width = header.len();
    let mut html = String::from("<table>");
    let mut rows = vec![header];
    rows.extend(lines[2..].iter().map(|line| split_row(line)));
    for cells in rows.drain(..) {
        html.push_str("<tr>");
        let pad = width.saturating_sub(cells.len());
        for cell in &cells {
            html.push_str("<td>");
            html.push_str(&escape_html(cell));
            html.push_str("</td>");
        }
        for _ in 0..pad {
            html.push_str("<td></td>");
        }
        html.push_str("</tr>");
    }
    html.push_str("</table>");
    Ok(html)
}
