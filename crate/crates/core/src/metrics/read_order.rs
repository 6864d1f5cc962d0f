//! Reading-order scoring: edit distance between the ground-truth order of
//! text units and the order implied by their matched predictions' offsets.

use crate::matcher::FilteredMatch;
use crate::metrics::edit::levenshtein;

/// Score the reading order of matched text units.
///
/// `gt_orders[i]` is the reading-order index of ground-truth text unit `i`
/// (None for units outside the reading flow); `pred_offsets[j]` is the start
/// offset of prediction unit `j` in the preprocessed markdown.
///
/// Sequence A holds the ordered unit indices sorted by ground-truth order;
/// sequence B holds the matched subset sorted by the smallest start offset of
/// each unit's prediction group. The score is the Levenshtein distance
/// between A and B over unit identities, divided by `max(|A|, |B|)`; 0 when A
/// is empty. Tables, formulas, and ignored components never enter either
/// sequence.
pub fn reading_order_score(
    gt_orders: &[Option<u32>],
    pred_offsets: &[usize],
    matched: &FilteredMatch,
) -> f64 {
    let mut by_order: Vec<(u32, usize)> = gt_orders
        .iter()
        .enumerate()
        .filter_map(|(i, o)| o.map(|o| (o, i)))
        .collect();
    by_order.sort_unstable();
    let a: Vec<usize> = by_order.iter().map(|&(_, i)| i).collect();
    if a.is_empty() {
        return 0.0;
    }

    let mut by_offset: Vec<(usize, u32, usize)> = Vec::new();
    for pair in &matched.pairs {
        let Some(offset) = pair.pred.iter().map(|&j| pred_offsets[j]).min() else { continue };
        for &i in &pair.gt {
            if let Some(order) = gt_orders[i] {
                by_offset.push((offset, order, i));
            }
        }
    }
    by_offset.sort_unstable();
    let b: Vec<usize> = by_offset.iter().map(|&(_, _, i)| i).collect();

    levenshtein(&a, &b) as f64 / a.len().max(b.len()) as f64
}
