//! Tree-Edit-Distance-based Similarity (TEDS) over HTML table trees.
//!
//! Tables are parsed into ordered labeled trees (`table`/`thead`/`tbody`/
//! `tr`/`td`; `th` is normalized to `td`), then compared with the
//! Zhang–Shasha ordered tree edit distance. Insert and delete cost 1;
//! substituting a node costs 1 when labels or span attributes differ, the
//! normalized edit distance of the cell texts for matching `td` nodes, and 0
//! for matching structural nodes.

use std::fmt::Write as _;

use crate::error::{EvalError, Result};
use crate::metrics::edit::normalized_edit_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeLabel {
    Table,
    Thead,
    Tbody,
    Tr,
    Td,
}

impl NodeLabel {
    fn as_str(self) -> &'static str {
        match self {
            NodeLabel::Table => "table",
            NodeLabel::Thead => "thead",
            NodeLabel::Tbody => "tbody",
            NodeLabel::Tr => "tr",
            NodeLabel::Td => "td",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TableNode {
    pub label: NodeLabel,
    /// Whitespace-collapsed cell text; empty for structural nodes.
    pub text: String,
    pub colspan: u32,
    pub rowspan: u32,
    pub children: Vec<usize>,
}

/// Ordered labeled tree for one `<table>` element, stored as an arena with
/// node 0 as the root.
#[derive(Debug, Clone)]
pub struct TableTree {
    pub nodes: Vec<TableNode>,
}

impl TableTree {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Deterministic normalized serialization: lowercase tags, `td` only,
    /// span attributes in a fixed order, collapsed cell text.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        self.serialize_node(0, &mut out);
        out
    }

    fn serialize_node(&self, idx: usize, out: &mut String) {
        let node = &self.nodes[idx];
        let tag = node.label.as_str();
        out.push('<');
        out.push_str(tag);
        if node.label == NodeLabel::Td {
            if node.colspan != 1 {
                let _ = write!(out, " colspan=\"{}\"", node.colspan);
            }
            if node.rowspan != 1 {
                let _ = write!(out, " rowspan=\"{}\"", node.rowspan);
            }
        }
        out.push('>');
        if node.label == NodeLabel::Td {
            out.push_str(&node.text);
        }
        for &child in &node.children {
            self.serialize_node(child, out);
        }
        let _ = write!(out, "</{tag}>");
    }
}

// ---------------------------------------------------------------------------
// Lenient HTML table parsing
// ---------------------------------------------------------------------------

enum Token<'a> {
    Open { name: String, colspan: u32, rowspan: u32 },
    Close { name: String },
    Text(&'a str),
}

fn scan_tokens(html: &str) -> Vec<Token<'_>> {
    let bytes = html.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    let mut text_start = 0;
    while pos < bytes.len() {
        if bytes[pos] != b'<' {
            pos += 1;
            continue;
        }
        if text_start < pos {
            tokens.push(Token::Text(&html[text_start..pos]));
        }
        if html[pos..].starts_with("<!--") {
            let end = html[pos..].find("-->").map(|e| pos + e + 3).unwrap_or(bytes.len());
            pos = end;
            text_start = pos;
            continue;
        }
        let end = match html[pos..].find('>') {
            Some(e) => pos + e,
            None => {
                // Unterminated tag: treat the rest as text.
                text_start = pos;
                break;
            }
        };
        let inner = html[pos + 1..end].trim();
        pos = end + 1;
        text_start = pos;
        let (closing, inner) = match inner.strip_prefix('/') {
            Some(rest) => (true, rest.trim()),
            None => (false, inner),
        };
        let name_end = inner
            .find(|c: char| c.is_whitespace() || c == '/')
            .unwrap_or(inner.len());
        let name = inner[..name_end].to_ascii_lowercase();
        if name.is_empty() {
            continue;
        }
        if closing {
            tokens.push(Token::Close { name });
        } else {
            let attrs = &inner[name_end..];
            tokens.push(Token::Open {
                name,
                colspan: span_attr(attrs, "colspan"),
                rowspan: span_attr(attrs, "rowspan"),
            });
        }
    }
    if text_start < bytes.len() {
        tokens.push(Token::Text(&html[text_start..]));
    }
    tokens
}

fn span_attr(attrs: &str, key: &str) -> u32 {
    let lower = attrs.to_ascii_lowercase();
    let mut search = 0;
    while let Some(found) = lower[search..].find(key) {
        let at = search + found;
        let after = &attrs[at + key.len()..];
        let after = after.trim_start();
        if let Some(rest) = after.strip_prefix('=') {
            let rest = rest.trim_start();
            let value = if let Some(q) = rest.strip_prefix('"') {
                q.split('"').next().unwrap_or("")
            } else if let Some(q) = rest.strip_prefix('\'') {
                q.split('\'').next().unwrap_or("")
            } else {
                rest.split(|c: char| c.is_whitespace() || c == '/' || c == '>').next().unwrap_or("")
            };
            if let Ok(v) = value.trim().parse::<u32>() {
                return v.max(1);
            }
        }
        search = at + key.len();
    }
    1
}

fn decode_entities(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        if c != '&' {
            out.push(c);
            continue;
        }
        let rest = &text[i + 1..];
        let semi = rest.find(';').filter(|&e| e <= 10);
        match semi {
            Some(e) => {
                let entity = &rest[..e];
                let decoded = match entity {
                    "amp" => Some('&'),
                    "lt" => Some('<'),
                    "gt" => Some('>'),
                    "quot" => Some('"'),
                    "apos" => Some('\''),
                    "nbsp" => Some(' '),
                    _ => entity
                        .strip_prefix("#x")
                        .or_else(|| entity.strip_prefix("#X"))
                        .and_then(|h| u32::from_str_radix(h, 16).ok())
                        .or_else(|| entity.strip_prefix('#').and_then(|d| d.parse().ok()))
                        .and_then(char::from_u32),
                };
                match decoded {
                    Some(d) => {
                        out.push(d);
                        for _ in 0..=e {
                            chars.next();
                        }
                    }
                    None => out.push('&'),
                }
            }
            None => out.push('&'),
        }
    }
    out
}

struct TreeBuilder {
    nodes: Vec<TableNode>,
    /// Stack of open structural node indices; bottom is the table root.
    stack: Vec<usize>,
    cell_text: String,
    warnings: Vec<String>,
}

impl TreeBuilder {
    fn current_label(&self) -> Option<NodeLabel> {
        self.stack.last().map(|&i| self.nodes[i].label)
    }

    fn push_node(&mut self, label: NodeLabel, colspan: u32, rowspan: u32) {
        let idx = self.nodes.len();
        self.nodes.push(TableNode { label, text: String::new(), colspan, rowspan, children: Vec::new() });
        if let Some(&parent) = self.stack.last() {
            self.nodes[parent].children.push(idx);
        }
        self.stack.push(idx);
    }

    fn close_top(&mut self) {
        if let Some(idx) = self.stack.pop() {
            if self.nodes[idx].label == NodeLabel::Td {
                self.nodes[idx].text = collapse_ws(&decode_entities(&self.cell_text));
                self.cell_text.clear();
            }
        }
    }

    /// Close open nodes until the top of the stack is one of `until`.
    fn close_while(&mut self, inner: &[NodeLabel]) {
        while let Some(label) = self.current_label() {
            if inner.contains(&label) {
                self.close_top();
            } else {
                break;
            }
        }
    }
}

fn collapse_ws(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Parse the first `<table>` element of `html` into a normalized tree.
///
/// Lowercases tags, folds `th` into `td`, keeps `thead`/`tbody` when present,
/// drops every attribute except `colspan`/`rowspan`, and collapses cell
/// whitespace. Unclosed structural tags are auto-closed with a warning on the
/// diagnostics log. Fails only when no table element is present.
pub fn parse_html_table(html: &str) -> Result<TableTree> {
    let mut b = TreeBuilder { nodes: Vec::new(), stack: Vec::new(), cell_text: String::new(), warnings: Vec::new() };
    let mut in_table = false;
    for token in scan_tokens(html) {
        match token {
            Token::Open { name, colspan, rowspan } => {
                if !in_table {
                    if name == "table" {
                        in_table = true;
                        b.push_node(NodeLabel::Table, 1, 1);
                    }
                    continue;
                }
                match name.as_str() {
                    "table" => {
                        // Nested table: flatten its rows into the current one.
                        b.warnings.push("nested <table> flattened".to_owned());
                    }
                    "thead" | "tbody" => {
                        b.close_while(&[NodeLabel::Td, NodeLabel::Tr, NodeLabel::Thead, NodeLabel::Tbody]);
                        b.push_node(if name == "thead" { NodeLabel::Thead } else { NodeLabel::Tbody }, 1, 1);
                    }
                    "tr" => {
                        b.close_while(&[NodeLabel::Td, NodeLabel::Tr]);
                        b.push_node(NodeLabel::Tr, 1, 1);
                    }
                    "td" | "th" => {
                        b.close_while(&[NodeLabel::Td]);
                        if b.current_label() != Some(NodeLabel::Tr) {
                            b.warnings.push(format!("<{name}> outside a row; opening an implicit <tr>"));
                            b.push_node(NodeLabel::Tr, 1, 1);
                        }
                        b.push_node(NodeLabel::Td, colspan, rowspan);
                    }
                    _ => {} // formatting tags inside cells are dropped
                }
            }
            Token::Close { name } => {
                if !in_table {
                    continue;
                }
                match name.as_str() {
                    "table" => break,
                    "thead" | "tbody" => {
                        b.close_while(&[NodeLabel::Td, NodeLabel::Tr]);
                        if matches!(b.current_label(), Some(NodeLabel::Thead | NodeLabel::Tbody)) {
                            b.close_top();
                        }
                    }
                    "tr" => {
                        b.close_while(&[NodeLabel::Td]);
                        if b.current_label() == Some(NodeLabel::Tr) {
                            b.close_top();
                        }
                    }
                    "td" | "th" => {
                        if b.current_label() == Some(NodeLabel::Td) {
                            b.close_top();
                        }
                    }
                    _ => {}
                }
            }
            Token::Text(t) => {
                if in_table && b.current_label() == Some(NodeLabel::Td) {
                    b.cell_text.push_str(t);
                }
            }
        }
    }
    if !in_table {
        return Err(EvalError::NoTableElement);
    }
    if b.stack.len() > 1 {
        b.warnings.push(format!("{} unclosed structural tag(s) auto-closed", b.stack.len() - 1));
    }
    while !b.stack.is_empty() {
        b.close_top();
    }
    for w in &b.warnings {
        log::warn!("table parse: {w}");
    }
    Ok(TableTree { nodes: b.nodes })
}

// ---------------------------------------------------------------------------
// Zhang–Shasha ordered tree edit distance
// ---------------------------------------------------------------------------

struct PostorderTree {
    /// Node payloads in postorder.
    labels: Vec<NodeLabel>,
    texts: Vec<String>,
    spans: Vec<(u32, u32)>,
    /// Leftmost leaf descendant of each postorder node.
    lld: Vec<usize>,
    keyroots: Vec<usize>,
}

impl PostorderTree {
    fn build(tree: &TableTree) -> Self {
        let mut labels = Vec::new();
        let mut texts = Vec::new();
        let mut spans = Vec::new();
        let mut lld = Vec::new();
        fn walk(
            tree: &TableTree,
            idx: usize,
            labels: &mut Vec<NodeLabel>,
            texts: &mut Vec<String>,
            spans: &mut Vec<(u32, u32)>,
            lld: &mut Vec<usize>,
        ) -> usize {
            let node = &tree.nodes[idx];
            let mut own_lld = None;
            for &child in &node.children {
                let child_lld = walk(tree, child, labels, texts, spans, lld);
                own_lld.get_or_insert(child_lld);
            }
            labels.push(node.label);
            texts.push(node.text.clone());
            spans.push((node.colspan, node.rowspan));
            let pos = labels.len() - 1;
            let own = own_lld.unwrap_or(pos);
            lld.push(own);
            own
        }
        walk(tree, 0, &mut labels, &mut texts, &mut spans, &mut lld);

        let n = labels.len();
        let mut keyroots = Vec::new();
        for i in 0..n {
            if !(i + 1..n).any(|j| lld[j] == lld[i]) {
                keyroots.push(i);
            }
        }
        PostorderTree { labels, texts, spans, lld, keyroots }
    }

    fn len(&self) -> usize {
        self.labels.len()
    }
}

fn substitution_cost(a: &PostorderTree, i: usize, b: &PostorderTree, j: usize) -> f64 {
    if a.labels[i] != b.labels[j] {
        return 1.0;
    }
    if a.labels[i] == NodeLabel::Td {
        if a.spans[i] != b.spans[j] {
            return 1.0;
        }
        return normalized_edit_distance(&a.texts[i], &b.texts[j]);
    }
    0.0
}

/// Ordered tree edit distance with unit insert/delete cost and the TEDS
/// substitution cost model.
pub fn tree_edit_distance(ta: &TableTree, tb: &TableTree) -> f64 {
    let a = PostorderTree::build(ta);
    let b = PostorderTree::build(tb);
    let (n, m) = (a.len(), b.len());
    let mut td = vec![vec![0.0f64; m]; n];

    for &x in &a.keyroots {
        for &y in &b.keyroots {
            // Forest distance over the subforests rooted at keyroots x, y.
            let (lx, ly) = (a.lld[x], b.lld[y]);
            let rows = x - lx + 2;
            let cols = y - ly + 2;
            let mut fd = vec![vec![0.0f64; cols]; rows];
            for di in 1..rows {
                fd[di][0] = fd[di - 1][0] + 1.0;
            }
            for dj in 1..cols {
                fd[0][dj] = fd[0][dj - 1] + 1.0;
            }
            for di in 1..rows {
                let i = lx + di - 1;
                for dj in 1..cols {
                    let j = ly + dj - 1;
                    let del = fd[di - 1][dj] + 1.0;
                    let ins = fd[di][dj - 1] + 1.0;
                    if a.lld[i] == lx && b.lld[j] == ly {
                        let sub = fd[di - 1][dj - 1] + substitution_cost(&a, i, &b, j);
                        fd[di][dj] = del.min(ins).min(sub);
                        td[i][j] = fd[di][dj];
                    } else {
                        let bridge =
                            fd[a.lld[i] - lx][b.lld[j] - ly] + td[i][j];
                        fd[di][dj] = del.min(ins).min(bridge);
                    }
                }
            }
        }
    }
    td[n - 1][m - 1]
}

/// TEDS similarity between two HTML tables: `1 - distance / max(|Ta|, |Tb|)`,
/// floored at 0.
///
/// A ground-truth parse failure is an error (the corpus is broken); a
/// prediction parse failure scores 0.
pub fn teds(gt_html: &str, pred_html: &str) -> Result<f64> {
    let gt = parse_html_table(gt_html)?;
    let pred = match parse_html_table(pred_html) {
        Ok(t) => t,
        Err(_) => return Ok(0.0),
    };
    Ok(teds_trees(&gt, &pred))
}

/// TEDS over already-parsed trees.
pub fn teds_trees(gt: &TableTree, pred: &TableTree) -> f64 {
    let denom = gt.node_count().max(pred.node_count()) as f64;
    (1.0 - tree_edit_distance(gt, pred) / denom).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels_of(tree: &TableTree) -> Vec<&'static str> {
        tree.nodes.iter().map(|n| n.label.as_str()).collect()
    }

    #[test]
    fn parses_minimal_table() {
        let t = parse_html_table("<table><tr><td>a</td></tr></table>").unwrap();
        assert_eq!(labels_of(&t), ["table", "tr", "td"]);
        assert_eq!(t.nodes[2].text, "a");
    }

    #[test]
    fn th_normalized_to_td() {
        let t = parse_html_table("<table><tr><th>h</th></tr></table>").unwrap();
        assert_eq!(labels_of(&t), ["table", "tr", "td"]);
        assert_eq!(t.nodes[2].text, "h");
    }

    #[test]
    fn no_table_is_error() {
        assert!(matches!(parse_html_table("<p>x</p>"), Err(EvalError::NoTableElement)));
    }

    #[test]
    fn keeps_sections_and_spans_drops_other_attrs() {
        let t = parse_html_table(
            "<table class=\"x\"><thead><tr><th colspan=\"2\">h</th></tr></thead>\
             <tbody><tr><td style=\"color:red\">a</td><td rowspan='3'> b  c </td></tr></tbody></table>",
        )
        .unwrap();
        assert_eq!(labels_of(&t), ["table", "thead", "tr", "td", "tbody", "tr", "td", "td"]);
        assert_eq!(t.nodes[3].colspan, 2);
        assert_eq!(t.nodes[7].rowspan, 3);
        assert_eq!(t.nodes[7].text, "b c");
        assert_eq!(
            t.serialize(),
            "<table><thead><tr><td colspan=\"2\">h</td></tr></thead>\
             <tbody><tr><td>a</td><td rowspan=\"3\">b c</td></tr></tbody></table>"
        );
    }

    #[test]
    fn auto_closes_unclosed_tags() {
        let t = parse_html_table("<table><tr><td>a<td>b<tr><td>c</table>").unwrap();
        assert_eq!(labels_of(&t), ["table", "tr", "td", "td", "tr", "td"]);
        assert_eq!(t.nodes[3].text, "b");
    }

    #[test]
    fn decodes_entities_and_strips_markup_in_cells() {
        let t = parse_html_table("<table><tr><td><b>a &amp; b</b> &#946;</td></tr></table>").unwrap();
        assert_eq!(t.nodes[2].text, "a & b β");
    }

    #[test]
    fn identical_tables_score_one() {
        let html = "<table><tr><td>a</td><td>b</td></tr><tr><td>1</td><td>2</td></tr></table>";
        assert_eq!(teds(html, html).unwrap(), 1.0);
    }

    #[test]
    fn extra_cell_scores_three_quarters() {
        let gt = "<table><tr><td>a</td></tr></table>";
        let pred = "<table><tr><td>a</td><td>b</td></tr></table>";
        let score = teds(gt, pred).unwrap();
        assert!((score - 0.75).abs() < 1e-12, "{score}");
    }

    #[test]
    fn cell_text_substitution_is_fractional() {
        let gt = "<table><tr><td>ab</td></tr></table>";
        let pred = "<table><tr><td>ac</td></tr></table>";
        let score = teds(gt, pred).unwrap();
        assert!((score - (1.0 - 0.5 / 3.0)).abs() < 1e-12, "{score}");
    }

    #[test]
    fn differing_span_attribute_costs_one() {
        let gt = "<table><tr><td colspan=\"2\">a</td></tr></table>";
        let pred = "<table><tr><td>a</td></tr></table>";
        let score = teds(gt, pred).unwrap();
        assert!((score - (1.0 - 1.0 / 3.0)).abs() < 1e-12, "{score}");
    }

    #[test]
    fn pred_parse_failure_scores_zero() {
        let gt = "<table><tr><td>a</td></tr></table>";
        assert_eq!(teds(gt, "\\begin{tabular}{c} a \\end{tabular}").unwrap(), 0.0);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = "<table><tr><td>a</td><td>b</td></tr></table>";
        let b = "<table><tr><td>a</td></tr><tr><td>c</td></tr></table>";
        assert_eq!(teds(a, b).unwrap(), teds(b, a).unwrap());
    }

    #[test]
    fn empty_single_cell_below_one_against_bigger_tables() {
        let single = "<table><tr><td></td></tr></table>";
        let bigger = "<table><tr><td>a</td><td>b</td></tr></table>";
        assert!(teds(bigger, single).unwrap() < 1.0);
    }
}
