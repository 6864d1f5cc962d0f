//! Alignment of ground-truth units with predicted elements.
//!
//! Matching runs in two stages. Stage 1 pairs units one-to-one wherever the
//! normalized-edit-distance similarity clears a threshold, resolving
//! candidates in descending similarity. Stage 2 rescues units broken apart by
//! paragraph segmentation differences: every pair absorbs adjacent unmatched
//! units while doing so strictly lowers its distance (growth may alternate
//! between the two sides, since either side may have split what the other
//! merged), and units whose string is (approximately) contained in an
//! unmatched counterpart seed new pairs the same way. A final coalescing
//! pass merges adjacent pairs whenever the merged pair beats both originals,
//! which recovers alignments that greedy thresholding split across a
//! segmentation boundary.
//!
//! Units are addressed by index into the caller's lists: ground-truth units
//! in reading order, predictions in source-span order. Groups concatenate
//! their texts with a single space.

use std::collections::HashSet;

use crate::annotation::BlockCategory;
use crate::metrics::edit::normalized_edit_distance;

#[derive(Debug, Clone, Copy)]
pub struct MatchConfig {
    /// Minimum `1 - distance` similarity for a stage-1 match; in (0, 1].
    pub similarity_threshold: f64,
    /// Share of the shorter string that must appear, in order, inside the
    /// longer one for containment status; in (0, 1].
    pub containment_ratio: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig { similarity_threshold: 0.7, containment_ratio: 0.9 }
    }
}

/// One aligned pair: a contiguous group of ground-truth unit indices, a
/// contiguous group of prediction indices, and the normalized edit distance
/// of the groups' concatenated texts.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchPair {
    pub gt: Vec<usize>,
    pub pred: Vec<usize>,
    pub distance: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MatchResult {
    pub pairs: Vec<MatchPair>,
    pub unmatched_gt: Vec<usize>,
    pub unmatched_pred: Vec<usize>,
}

impl MatchResult {
    /// Alignment cost: each pair contributes its distance weighted by the
    /// number of units it covers (so merging pairs cannot dilute errors for
    /// free), plus a penalty of 1 per unmatched unit.
    pub fn cost(&self) -> f64 {
        self.pairs
            .iter()
            .map(|p| p.distance * (p.gt.len() + p.pred.len()) as f64 / 2.0)
            .sum::<f64>()
            + (self.unmatched_gt.len() + self.unmatched_pred.len()) as f64
    }
}

/// A [`MatchResult`] with scoring eligibility resolved: pairs whose
/// ground-truth group is all boilerplate stay in the alignment but are
/// excluded from metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub gt: Vec<usize>,
    pub pred: Vec<usize>,
    pub distance: f64,
    pub scored: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FilteredMatch {
    pub pairs: Vec<ScoredPair>,
    /// Unmatched ground-truth units that still count against the model.
    pub unmatched_gt: Vec<usize>,
    /// Unmatched predictions not attributable to ignored ground truth.
    pub unmatched_pred: Vec<usize>,
}

/// Entry `(i, j)` is the normalized edit distance between `gt_texts[i]` and
/// `pred_texts[j]`.
pub fn distance_matrix(gt_texts: &[String], pred_texts: &[String]) -> Vec<Vec<f64>> {
    gt_texts
        .iter()
        .map(|g| pred_texts.iter().map(|p| normalized_edit_distance(g, p)).collect())
        .collect()
}

/// Smallest edit distance between `pattern` and any contiguous substring of
/// `text` (deletions of a text prefix and suffix are free).
fn substring_edit_distance(pattern: &[char], text: &[char]) -> usize {
    let mut prev = vec![0usize; text.len() + 1];
    let mut curr = vec![0usize; text.len() + 1];
    for (i, p) in pattern.iter().enumerate() {
        curr[0] = i + 1;
        for (j, t) in text.iter().enumerate() {
            let sub = prev[j] + usize::from(p != t);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev.into_iter().min().unwrap_or(0)
}

/// Fraction of the shorter string that appears, contiguously and in order,
/// inside the longer: `1 - substring_edit_distance / |shorter|`. Returns 0
/// when either string is empty.
pub fn fuzzy_containment(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (short, long) = if a.len() <= b.len() { (&a, &b) } else { (&b, &a) };
    if short.is_empty() {
        return 0.0;
    }
    // The DP is quadratic; for pathologically large inputs fall back to a
    // literal substring probe.
    if short.len().saturating_mul(long.len()) > 16_000_000 {
        let short_s: String = short.iter().collect();
        let long_s: String = long.iter().collect();
        return if long_s.contains(&short_s) { 1.0 } else { 0.0 };
    }
    1.0 - substring_edit_distance(short, long) as f64 / short.len() as f64
}

fn join_range(texts: &[String], lo: usize, hi: usize) -> String {
    texts[lo..=hi].join(" ")
}

/// A pair under construction: contiguous index ranges on both sides.
#[derive(Debug, Clone, Copy)]
struct Region {
    gt_lo: usize,
    gt_hi: usize,
    pred_lo: usize,
    pred_hi: usize,
    distance: f64,
}

/// Absorb adjacent free units into `region` while the distance strictly
/// drops. Extensions on either side compete each round; the largest drop
/// wins, earlier candidates winning ties.
fn grow_region(
    region: &mut Region,
    gt_texts: &[String],
    pred_texts: &[String],
    gt_free: &mut [bool],
    pred_free: &mut [bool],
) {
    loop {
        let mut best: Option<(usize, f64)> = None;
        let candidates = [
            region.gt_lo.checked_sub(1).filter(|&i| gt_free[i]).map(|_| 0usize),
            (region.gt_hi + 1 < gt_texts.len() && gt_free[region.gt_hi + 1]).then_some(1),
            region.pred_lo.checked_sub(1).filter(|&j| pred_free[j]).map(|_| 2),
            (region.pred_hi + 1 < pred_texts.len() && pred_free[region.pred_hi + 1]).then_some(3),
        ];
        for which in candidates.into_iter().flatten() {
            let (g_lo, g_hi, p_lo, p_hi) = match which {
                0 => (region.gt_lo - 1, region.gt_hi, region.pred_lo, region.pred_hi),
                1 => (region.gt_lo, region.gt_hi + 1, region.pred_lo, region.pred_hi),
                2 => (region.gt_lo, region.gt_hi, region.pred_lo - 1, region.pred_hi),
                _ => (region.gt_lo, region.gt_hi, region.pred_lo, region.pred_hi + 1),
            };
            let d = normalized_edit_distance(
                &join_range(gt_texts, g_lo, g_hi),
                &join_range(pred_texts, p_lo, p_hi),
            );
            if d < region.distance && best.map_or(true, |(_, bd)| d < bd) {
                best = Some((which, d));
            }
        }
        let Some((which, d)) = best else { break };
        match which {
            0 => {
                region.gt_lo -= 1;
                gt_free[region.gt_lo] = false;
            }
            1 => {
                region.gt_hi += 1;
                gt_free[region.gt_hi] = false;
            }
            2 => {
                region.pred_lo -= 1;
                pred_free[region.pred_lo] = false;
            }
            _ => {
                region.pred_hi += 1;
                pred_free[region.pred_hi] = false;
            }
        }
        region.distance = d;
    }
}

/// Align ground-truth units with prediction units, merging adjacent units on
/// either side to recover from paragraph segmentation differences.
pub fn adjacency_search_match(
    gt_texts: &[String],
    pred_texts: &[String],
    config: &MatchConfig,
) -> MatchResult {
    let matrix = distance_matrix(gt_texts, pred_texts);
    let mut gt_free = vec![true; gt_texts.len()];
    let mut pred_free = vec![true; pred_texts.len()];
    let mut regions: Vec<Region> = Vec::new();

    // Stage 1: thresholded one-to-one matches, best similarity first, ties
    // broken by lower GT index then lower prediction index.
    let mut candidates: Vec<(usize, usize)> = Vec::new();
    for (i, row) in matrix.iter().enumerate() {
        for (j, &d) in row.iter().enumerate() {
            if 1.0 - d >= config.similarity_threshold {
                candidates.push((i, j));
            }
        }
    }
    candidates.sort_by(|&(i1, j1), &(i2, j2)| {
        matrix[i1][j1]
            .total_cmp(&matrix[i2][j2])
            .then(i1.cmp(&i2))
            .then(j1.cmp(&j2))
    });
    for (i, j) in candidates {
        if gt_free[i] && pred_free[j] {
            gt_free[i] = false;
            pred_free[j] = false;
            regions.push(Region { gt_lo: i, gt_hi: i, pred_lo: j, pred_hi: j, distance: matrix[i][j] });
        }
    }

    // Stage 2: pairs grow over adjacent units — threshold matches first (a
    // fragment that cleared the bar may still be missing its tail), then new
    // pairs seeded wherever one side's string is contained in the other's.
    for region in &mut regions {
        grow_region(region, gt_texts, pred_texts, &mut gt_free, &mut pred_free);
    }
    for g in 0..gt_texts.len() {
        if !gt_free[g] {
            continue;
        }
        let seed = (0..pred_texts.len())
            .filter(|&p| pred_free[p])
            .filter(|&p| fuzzy_containment(&gt_texts[g], &pred_texts[p]) >= config.containment_ratio)
            .min_by(|&p1, &p2| matrix[g][p1].total_cmp(&matrix[g][p2]).then(p1.cmp(&p2)));
        let Some(p) = seed else { continue };
        gt_free[g] = false;
        pred_free[p] = false;
        let mut region = Region { gt_lo: g, gt_hi: g, pred_lo: p, pred_hi: p, distance: matrix[g][p] };
        grow_region(&mut region, gt_texts, pred_texts, &mut gt_free, &mut pred_free);
        regions.push(region);
    }

    // Coalescing: merge pairs that are neighbors in ground-truth order when
    // the union beats both parts, absorbing any still-free units sitting in
    // the gap between them. This repairs splits locked in by greedy
    // thresholding (including chunks that straddle a boundary and anchored
    // nowhere), without gluing together pairs that are each already good.
    loop {
        let mut best: Option<(usize, usize, f64)> = None;
        let mut best_gain = 0.0f64;
        for a in 0..regions.len() {
            for b in 0..regions.len() {
                if a == b {
                    continue;
                }
                let (p, q) = (&regions[a], &regions[b]);
                if p.gt_hi >= q.gt_lo {
                    continue;
                }
                let gt_gap_free = (p.gt_hi + 1..q.gt_lo).all(|i| gt_free[i]);
                let (lo, hi) = if p.pred_hi < q.pred_lo {
                    (p.pred_hi, q.pred_lo)
                } else if q.pred_hi < p.pred_lo {
                    (q.pred_hi, p.pred_lo)
                } else {
                    continue;
                };
                let pred_gap_free = (lo + 1..hi).all(|j| pred_free[j]);
                if !gt_gap_free || !pred_gap_free {
                    continue;
                }
                let pred_lo = p.pred_lo.min(q.pred_lo);
                let pred_hi = p.pred_hi.max(q.pred_hi);
                let d = normalized_edit_distance(
                    &join_range(gt_texts, p.gt_lo, q.gt_hi),
                    &join_range(pred_texts, pred_lo, pred_hi),
                );
                let gain = p.distance + q.distance - d;
                if d < p.distance.min(q.distance) && gain > best_gain {
                    best = Some((a, b, d));
                    best_gain = gain;
                }
            }
        }
        let Some((a, b, d)) = best else { break };
        let q = regions[b];
        let p = &mut regions[a];
        *p = Region {
            gt_lo: p.gt_lo,
            gt_hi: q.gt_hi,
            pred_lo: p.pred_lo.min(q.pred_lo),
            pred_hi: p.pred_hi.max(q.pred_hi),
            distance: d,
        };
        let merged = *p;
        for i in merged.gt_lo..=merged.gt_hi {
            gt_free[i] = false;
        }
        for j in merged.pred_lo..=merged.pred_hi {
            pred_free[j] = false;
        }
        regions.remove(b);
        // The enlarged pair may now reach new free neighbors.
        let a = if a > b { a - 1 } else { a };
        grow_region(&mut regions[a], gt_texts, pred_texts, &mut gt_free, &mut pred_free);
    }

    regions.sort_by_key(|r| (r.gt_lo, r.pred_lo));
    MatchResult {
        pairs: regions
            .into_iter()
            .map(|r| MatchPair {
                gt: (r.gt_lo..=r.gt_hi).collect(),
                pred: (r.pred_lo..=r.pred_hi).collect(),
                distance: r.distance,
            })
            .collect(),
        unmatched_gt: (0..gt_texts.len()).filter(|&i| gt_free[i]).collect(),
        unmatched_pred: (0..pred_texts.len()).filter(|&j| pred_free[j]).collect(),
    }
}

/// Resolve which pairs count toward metrics. Pairs whose ground-truth group
/// is entirely ignored or masked stay aligned but are not scored; unmatched
/// ignored ground truth is dropped (a model is not penalized for omitting
/// boilerplate), and unmatched predictions that would stage-1-match some
/// ignored ground-truth unit are likewise excused.
pub fn apply_ignore_rules(
    gt_categories: &[BlockCategory],
    gt_texts: &[String],
    pred_texts: &[String],
    result: &MatchResult,
    config: &MatchConfig,
    ignored: &HashSet<BlockCategory>,
) -> FilteredMatch {
    let is_ignored = |i: usize| {
        let cat = gt_categories[i];
        ignored.contains(&cat) || cat.is_masked()
    };

    let pairs = result
        .pairs
        .iter()
        .map(|p| ScoredPair {
            gt: p.gt.clone(),
            pred: p.pred.clone(),
            distance: p.distance,
            scored: !p.gt.iter().all(|&i| is_ignored(i)),
        })
        .collect();

    let unmatched_gt = result.unmatched_gt.iter().copied().filter(|&i| !is_ignored(i)).collect();

    let ignored_units: Vec<usize> = (0..gt_categories.len()).filter(|&i| is_ignored(i)).collect();
    let unmatched_pred = result
        .unmatched_pred
        .iter()
        .copied()
        .filter(|&j| {
            !ignored_units.iter().any(|&i| {
                1.0 - normalized_edit_distance(&gt_texts[i], &pred_texts[j])
                    >= config.similarity_threshold
            })
        })
        .collect();

    FilteredMatch { pairs, unmatched_gt, unmatched_pred }
}
