//! Independent oracles the acceptance suite checks the implementation
//! against. Each one takes a deliberately different route from the code
//! under test: memoized recursion instead of the rolling-array DP, Tai
//! mapping enumeration instead of Zhang–Shasha, exhaustive contiguous
//! grouping search instead of adjacency search, and a from-scratch BLEU.
#![allow(dead_code)] // each test target uses its own subset

use std::collections::HashMap;

use doceval::metrics::teds::{NodeLabel, TableNode, TableTree};

// ---------------------------------------------------------------------------
// Edit distance: plain recursion with memoization
// ---------------------------------------------------------------------------

pub fn levenshtein_oracle(a: &str, b: &str) -> usize {
    fn rec(a: &[char], b: &[char], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let d = if a[i] == b[j] {
            rec(a, b, i + 1, j + 1, memo)
        } else {
            let del = rec(a, b, i + 1, j, memo);
            let ins = rec(a, b, i, j + 1, memo);
            let sub = rec(a, b, i + 1, j + 1, memo);
            1 + del.min(ins).min(sub)
        };
        memo.insert((i, j), d);
        d
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    rec(&a, &b, 0, 0, &mut HashMap::new())
}

pub fn normalized_edit_oracle(a: &str, b: &str) -> f64 {
    let longest = a.chars().count().max(b.chars().count());
    if longest == 0 {
        return 0.0;
    }
    levenshtein_oracle(a, b) as f64 / longest as f64
}

// ---------------------------------------------------------------------------
// Tree edit distance: exhaustive search over Tai mappings
// ---------------------------------------------------------------------------

struct FlatNode {
    label: NodeLabel,
    text: String,
    colspan: u32,
    rowspan: u32,
    pre: usize,
    post: usize,
}

fn flatten(tree: &TableTree) -> Vec<FlatNode> {
    fn walk(
        nodes: &[TableNode],
        idx: usize,
        pre_counter: &mut usize,
        post_counter: &mut usize,
        out: &mut Vec<(usize, usize, usize)>,
    ) {
        let pre = *pre_counter;
        *pre_counter += 1;
        for &child in &nodes[idx].children {
            walk(nodes, child, pre_counter, post_counter, out);
        }
        let post = *post_counter;
        *post_counter += 1;
        out.push((idx, pre, post));
    }
    let mut raw = Vec::new();
    walk(&tree.nodes, 0, &mut 0, &mut 0, &mut raw);
    raw.sort_by_key(|&(_, pre, _)| pre);
    raw.into_iter()
        .map(|(idx, pre, post)| {
            let n = &tree.nodes[idx];
            FlatNode {
                label: n.label,
                text: n.text.clone(),
                colspan: n.colspan,
                rowspan: n.rowspan,
                pre,
                post,
            }
        })
        .collect()
}

/// Structural relation between two distinct nodes of one tree.
#[derive(PartialEq, Clone, Copy)]
enum Rel {
    Ancestor,
    Descendant,
    Left,
    Right,
}

fn rel(a: &FlatNode, b: &FlatNode) -> Rel {
    if a.pre < b.pre && a.post > b.post {
        Rel::Ancestor
    } else if a.pre > b.pre && a.post < b.post {
        Rel::Descendant
    } else if a.pre < b.pre {
        Rel::Left
    } else {
        Rel::Right
    }
}

fn subst_cost(a: &FlatNode, b: &FlatNode) -> f64 {
    if a.label != b.label {
        return 1.0;
    }
    if a.label == NodeLabel::Td {
        if a.colspan != b.colspan || a.rowspan != b.rowspan {
            return 1.0;
        }
        return normalized_edit_oracle(&a.text, &b.text);
    }
    0.0
}

/// Minimum cost over all order- and ancestry-preserving partial mappings,
/// with unit insert/delete cost. Exponential; fine for tiny trees.
pub fn tree_edit_oracle(ta: &TableTree, tb: &TableTree) -> f64 {
    let a = flatten(ta);
    let b = flatten(tb);

    fn search(
        a: &[FlatNode],
        b: &[FlatNode],
        i: usize,
        pairs: &mut Vec<(usize, usize)>,
        used_b: &mut Vec<bool>,
        cost_so_far: f64,
        best: &mut f64,
    ) {
        if cost_so_far >= *best {
            return;
        }
        if i == a.len() {
            let inserts = used_b.iter().filter(|&&u| !u).count() as f64;
            let total = cost_so_far + inserts;
            if total < *best {
                *best = total;
            }
            return;
        }
        // Leave a[i] unmapped (deletion).
        search(a, b, i + 1, pairs, used_b, cost_so_far + 1.0, best);
        // Or map it to any compatible unused b[j].
        for j in 0..b.len() {
            if used_b[j] {
                continue;
            }
            let consistent = pairs
                .iter()
                .all(|&(pi, pj)| rel(&a[i], &a[pi]) == rel(&b[j], &b[pj]));
            if !consistent {
                continue;
            }
            pairs.push((i, j));
            used_b[j] = true;
            search(a, b, i + 1, pairs, used_b, cost_so_far + subst_cost(&a[i], &b[j]), best);
            used_b[j] = false;
            pairs.pop();
        }
    }

    let mut best = (a.len() + b.len()) as f64;
    search(&a, &b, 0, &mut Vec::new(), &mut vec![false; b.len()], 0.0, &mut best);
    best
}

pub fn teds_oracle(ta: &TableTree, tb: &TableTree) -> f64 {
    let denom = ta.node_count().max(tb.node_count()) as f64;
    (1.0 - tree_edit_oracle(ta, tb) / denom).max(0.0)
}

// ---------------------------------------------------------------------------
// Matching: exhaustive contiguous-grouping alignment
// ---------------------------------------------------------------------------

/// Minimum alignment cost over all monotone alignments that pair contiguous
/// ground-truth groups with contiguous prediction groups. A pair costs the
/// normalized edit distance of its joined texts weighted by the number of
/// units it covers; a skipped unit costs 1.
///
/// The search is the independent part here; the inner distance reuses the
/// crate metric, itself validated against [`levenshtein_oracle`], so both
/// sides of the comparison measure alignments with the same yardstick.
pub fn grouping_oracle(gt: &[String], pred: &[String]) -> f64 {
    fn rec(
        gt: &[String],
        pred: &[String],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), f64>,
    ) -> f64 {
        if i == gt.len() && j == pred.len() {
            return 0.0;
        }
        if let Some(&c) = memo.get(&(i, j)) {
            return c;
        }
        let mut best = f64::INFINITY;
        if i < gt.len() {
            best = best.min(1.0 + rec(gt, pred, i + 1, j, memo));
        }
        if j < pred.len() {
            best = best.min(1.0 + rec(gt, pred, i, j + 1, memo));
        }
        for a in i + 1..=gt.len() {
            for b in j + 1..=pred.len() {
                let d = doceval::metrics::normalized_edit_distance(
                    &gt[i..a].join(" "),
                    &pred[j..b].join(" "),
                );
                let weight = ((a - i) + (b - j)) as f64 / 2.0;
                best = best.min(d * weight + rec(gt, pred, a, b, memo));
            }
        }
        memo.insert((i, j), best);
        best
    }
    rec(gt, pred, 0, 0, &mut HashMap::new())
}

// ---------------------------------------------------------------------------
// BLEU: from-scratch reference implementation
// ---------------------------------------------------------------------------

pub fn bleu_oracle(reference: &str, hypothesis: &str) -> f64 {
    let r = doceval::metrics::tokenize_latex(reference);
    let h = doceval::metrics::tokenize_latex(hypothesis);
    if h.is_empty() {
        return 0.0;
    }

    let mut product = 1.0f64;
    for n in 1..=4usize {
        let mut ref_counts: HashMap<Vec<String>, i64> = HashMap::new();
        if r.len() >= n {
            for w in r.windows(n) {
                *ref_counts.entry(w.to_vec()).or_insert(0) += 1;
            }
        }
        let mut matched = 0i64;
        let mut total = 0i64;
        if h.len() >= n {
            for w in h.windows(n) {
                total += 1;
                if let Some(c) = ref_counts.get_mut(&w.to_vec()) {
                    if *c > 0 {
                        *c -= 1;
                        matched += 1;
                    }
                }
            }
        }
        let p = if n == 1 {
            if total == 0 || matched == 0 {
                return 0.0;
            }
            matched as f64 / total as f64
        } else {
            (matched + 1) as f64 / (total + 1) as f64
        };
        product *= p;
    }
    let bp = if h.len() >= r.len() { 1.0 } else { (1.0 - r.len() as f64 / h.len() as f64).exp() };
    bp * product.powf(0.25)
}
