//! Evaluation engine for document-parsing systems.
//!
//! Given a set of richly annotated ground-truth pages and the markdown a
//! parsing model produced for those pages, this crate extracts typed elements
//! from the markdown, aligns them with the ground-truth units, and scores the
//! alignment with component-specific metrics:
//!
//! - **Text**: normalized edit distance over matched paragraph groups.
//! - **Tables**: TEDS (tree-edit-distance similarity over HTML table trees)
//!   plus edit distance over serialized HTML.
//! - **Formulas**: normalized edit distance and BLEU over LaTeX sources.
//! - **Reading order**: edit distance between the ground-truth order and the
//!   order implied by prediction offsets.
//! - **Layout detection**: COCO-style mAP over bounding boxes.
//!
//! The pipeline (see [`pipeline`]) fans pages out to a worker pool when the
//! `parallel` feature is enabled (the default); results are identical to the
//! sequential path regardless of worker count.

pub mod annotation;
pub mod error;
pub mod extract;
pub mod fixtures;
pub mod layout;
pub mod matcher;
pub mod metrics;
pub mod pipeline;
pub mod report;

pub use annotation::{load_dataset, Dataset, GroundTruthPage};
pub use error::{EvalError, Result};
pub use pipeline::{evaluate_corpus, EvalOptions};
pub use report::EvalReport;
