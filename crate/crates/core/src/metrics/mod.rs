//! Scoring functions: normalized edit distance, TEDS, BLEU, and reading
//! order, plus a small registry so external formula scorers (e.g. a
//! rendering-based one) can be plugged in by name.

pub mod bleu;
pub mod edit;
pub mod read_order;
pub mod teds;

pub use bleu::{bleu, tokenize_latex};
pub use edit::{levenshtein, levenshtein_str, normalized_edit_distance, normalized_seq_distance};
pub use read_order::reading_order_score;
pub use teds::{parse_html_table, teds, tree_edit_distance, TableTree};

use std::collections::BTreeMap;

/// A named formula scorer mapping (reference, hypothesis) to [0, 1].
pub trait FormulaScorer: Send + Sync {
    fn name(&self) -> &'static str;
    fn score(&self, reference: &str, hypothesis: &str) -> f64;
}

struct EditScorer;

impl FormulaScorer for EditScorer {
    fn name(&self) -> &'static str {
        "edit"
    }

    fn score(&self, reference: &str, hypothesis: &str) -> f64 {
        normalized_edit_distance(reference, hypothesis)
    }
}

struct BleuScorer;

impl FormulaScorer for BleuScorer {
    fn name(&self) -> &'static str {
        "bleu"
    }

    fn score(&self, reference: &str, hypothesis: &str) -> f64 {
        bleu(reference, hypothesis)
    }
}

/// Registry of formula scorers keyed by metric name. `edit` and `bleu` are
/// built in; `cdm` is reserved for an external rendering-based scorer and can
/// be registered by embedders.
pub struct MetricRegistry {
    scorers: BTreeMap<&'static str, Box<dyn FormulaScorer>>,
}

impl Default for MetricRegistry {
    fn default() -> Self {
        let mut scorers: BTreeMap<&'static str, Box<dyn FormulaScorer>> = BTreeMap::new();
        scorers.insert("edit", Box::new(EditScorer));
        scorers.insert("bleu", Box::new(BleuScorer));
        MetricRegistry { scorers }
    }
}

impl MetricRegistry {
    pub fn register(&mut self, scorer: Box<dyn FormulaScorer>) {
        self.scorers.insert(scorer.name(), scorer);
    }

    pub fn get(&self, name: &str) -> Option<&dyn FormulaScorer> {
        self.scorers.get(name).map(|b| b.as_ref())
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.scorers.keys().copied()
    }
}
