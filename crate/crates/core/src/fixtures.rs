//! Deterministic synthetic ground-truth corpora for tests, benches, and
//! examples. Everything is derived from a seed; the same seed always yields
//! byte-identical pages, and an independently tallied manifest records what
//! was generated.

use std::collections::BTreeMap;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::annotation::{
    BBox, Block, BlockCategory, Dataset, GroundTruthPage, Language, LayoutType, PageAttributes,
    PdfType, Span, SpecialIssue, TableAttributes, TableFrame, TextAttributes, TextBackground,
    TextRotation,
};
use crate::error::{EvalError, Result};

const EN_WORDS: &[&str] = &[
    "document", "layout", "parsing", "content", "region", "column", "figure", "margin", "page",
    "table", "heading", "sample", "method", "result", "value", "section", "order", "reading",
    "model", "output", "block", "index", "corpus", "metric", "text",
];

const ZH_WORDS: &[&str] = &[
    "文档", "版面", "解析", "内容", "区域", "分栏", "插图", "页面", "表格", "标题", "样本",
    "方法", "结果", "数值", "章节", "顺序", "阅读", "模型", "输出", "段落", "索引", "语料",
];

const FORMULAS: &[&str] = &[
    "E = m c^2",
    "\\alpha + \\beta = \\gamma",
    "\\frac{x}{y} \\leq 1",
    "\\sum_{i=0}^{n} a_i",
    "f(x) = x^2 - 3x + 2",
    "\\int_0^1 g(t) dt",
    "\\nabla \\cdot F = 0",
    "p \\rightarrow q",
];

const INLINE_MATH: &[&str] = &["$\\alpha$", "$x^2$", "$a_i$", "$\\mu$", "$k \\geq 2$"];

const CODE_SNIPPETS: &[&str] = &[
    "let total = rows.len();",
    "for row in rows {\n    emit(row);\n}",
    "def area(w, h):\n    return w * h",
    "SELECT id FROM pages;",
];

/// Independent tally of what the generator produced, kept separate from
/// `dataset_stats` so the two can be cross-checked.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub pages: usize,
    pub pages_by_pdf_type: BTreeMap<String, usize>,
    pub blocks_by_category: BTreeMap<String, usize>,
    pub spans_by_category: BTreeMap<String, usize>,
}

impl Manifest {
    fn count_page(&mut self, pdf_type: PdfType) {
        self.pages += 1;
        *self.pages_by_pdf_type.entry(pdf_type.as_str().to_owned()).or_insert(0) += 1;
    }

    fn count_block(&mut self, category: BlockCategory) {
        *self.blocks_by_category.entry(category.as_str().to_owned()).or_insert(0) += 1;
    }

    fn count_span(&mut self, category: BlockCategory) {
        *self.spans_by_category.entry(category.as_str().to_owned()).or_insert(0) += 1;
    }
}

#[derive(Debug, Clone)]
pub struct FixtureCorpus {
    pub dataset: Dataset,
    pub manifest: Manifest,
}

/// Generate `num_pages` synthetic pages from `seed`.
pub fn corpus(num_pages: usize, seed: u64) -> FixtureCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut manifest = Manifest::default();
    let pages = (0..num_pages).map(|i| gen_page(i, &mut rng, &mut manifest)).collect();
    FixtureCorpus { dataset: Dataset { pages }, manifest }
}

fn words_for(language: Language) -> &'static [&'static str] {
    match language {
        Language::Zh => ZH_WORDS,
        _ => EN_WORDS,
    }
}

fn sentence(rng: &mut ChaCha8Rng, language: Language) -> String {
    let pool = words_for(language);
    let n = rng.gen_range(4..9);
    let mut words: Vec<&str> = (0..n).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
    if language == Language::Mixed {
        words[0] = ZH_WORDS[rng.gen_range(0..ZH_WORDS.len())];
    }
    let sep = if language == Language::Zh { "" } else { " " };
    format!("{}.", words.join(sep))
}

fn paragraph(rng: &mut ChaCha8Rng, language: Language) -> String {
    let n = rng.gen_range(1..4);
    let mut text = (0..n).map(|_| sentence(rng, language)).collect::<Vec<_>>().join(" ");
    if rng.gen_bool(0.25) {
        text.push(' ');
        text.push_str(INLINE_MATH[rng.gen_range(0..INLINE_MATH.len())]);
    }
    text
}

fn gen_table_html(rng: &mut ChaCha8Rng, language: Language) -> String {
    let pool = words_for(language);
    let rows = rng.gen_range(2..5);
    let cols = rng.gen_range(2..4);
    let mut html = String::from("<table>");
    for r in 0..rows {
        html.push_str("<tr>");
        for c in 0..cols {
            if r == 0 && c == 0 && rng.gen_bool(0.2) {
                html.push_str(&format!("<td colspan=\"2\">{}</td>", pool[rng.gen_range(0..pool.len())]));
                break;
            }
            html.push_str(&format!("<td>{} {}</td>", pool[rng.gen_range(0..pool.len())], r * cols + c));
        }
        html.push_str("</tr>");
    }
    html.push_str("</table>");
    html
}

fn text_attributes(rng: &mut ChaCha8Rng, language: Language) -> TextAttributes {
    TextAttributes {
        language,
        background: *[
            TextBackground::White,
            TextBackground::White,
            TextBackground::White,
            TextBackground::SingleColor,
            TextBackground::MultiColor,
        ]
        .choose(rng)
        .unwrap(),
        rotation: *[
            TextRotation::Normal,
            TextRotation::Normal,
            TextRotation::Normal,
            TextRotation::Normal,
            TextRotation::Rotate90,
            TextRotation::Horizontal,
        ]
        .choose(rng)
        .unwrap(),
    }
}

fn gen_page(index: usize, rng: &mut ChaCha8Rng, manifest: &mut Manifest) -> GroundTruthPage {
    let pdf_type = PdfType::ALL[index % PdfType::ALL.len()];
    let layout_type = LayoutType::ALL[rng.gen_range(0..LayoutType::ALL.len())];
    let language = *[Language::En, Language::En, Language::Zh, Language::Mixed].choose(rng).unwrap();
    let mut special_issues = Vec::new();
    for &issue in SpecialIssue::ALL {
        if rng.gen_bool(0.15) {
            special_issues.push(issue);
        }
    }
    manifest.count_page(pdf_type);

    let mut blocks = Vec::new();
    let mut order = 0u32;
    let mut y = 40.0;
    let mut block_no = 0usize;
    let next_id = |block_no: &mut usize| {
        let id = format!("p{index:04}_b{block_no:02}");
        *block_no += 1;
        id
    };
    let place = |y: &mut f64, height: f64| {
        let bbox = BBox::new(36.0, *y, 560.0, *y + height);
        *y += height + 12.0;
        bbox
    };

    // Boilerplate the models may or may not reproduce.
    if rng.gen_bool(0.7) {
        let mut header = Block::new(next_id(&mut block_no), BlockCategory::Header, BBox::new(36.0, 10.0, 560.0, 28.0));
        header.content = Some(format!("Chapter {} heading", index % 12 + 1));
        header.text_attributes = Some(text_attributes(rng, language));
        manifest.count_block(header.category);
        blocks.push(header);
    }

    let body_blocks = rng.gen_range(3..8);
    let mut figure_or_table: Option<String> = None;
    for _ in 0..body_blocks {
        let roll = rng.gen_range(0..100);
        // Integral pixel coordinates, as annotation tools produce.
        let bbox_tall = rng.gen_range(24..64) as f64;
        if roll < 55 {
            let mut block = Block::new(next_id(&mut block_no), BlockCategory::TextBlock, place(&mut y, bbox_tall));
            block.content = Some(paragraph(rng, language));
            block.order = Some(order);
            block.text_attributes = Some(text_attributes(rng, language));
            if rng.gen_bool(0.3) {
                let b = block.bbox;
                let span = Span {
                    category: if rng.gen_bool(0.5) {
                        BlockCategory::TextSpan
                    } else {
                        BlockCategory::EquationInline
                    },
                    bbox: BBox::new(b.x0 + 4.0, b.y0 + 2.0, b.x0 + 120.0, b.y0 + 14.0),
                    content: sentence(rng, language),
                };
                manifest.count_span(span.category);
                block.spans.push(span);
            }
            manifest.count_block(block.category);
            blocks.push(block);
        } else if roll < 65 {
            let mut block = Block::new(next_id(&mut block_no), BlockCategory::Title, place(&mut y, 22.0));
            block.content = Some(sentence(rng, language));
            block.order = Some(order);
            block.text_attributes = Some(text_attributes(rng, language));
            manifest.count_block(block.category);
            blocks.push(block);
        } else if roll < 78 {
            let mut block = Block::new(next_id(&mut block_no), BlockCategory::EquationIsolated, place(&mut y, 28.0));
            block.content = Some(FORMULAS[rng.gen_range(0..FORMULAS.len())].to_owned());
            block.order = Some(order);
            manifest.count_block(block.category);
            blocks.push(block);
        } else if roll < 90 {
            let mut block = Block::new(next_id(&mut block_no), BlockCategory::Table, place(&mut y, 80.0));
            block.content = Some(gen_table_html(rng, language));
            block.order = Some(order);
            block.table_attributes = Some(TableAttributes {
                language,
                frame: *TableFrame::ALL.choose(rng).unwrap(),
                merge_cell: rng.gen_bool(0.3),
                contains_formula: rng.gen_bool(0.2),
                colorful_background: rng.gen_bool(0.2),
                rotated: rng.gen_bool(0.02),
            });
            manifest.count_block(block.category);
            let id = block.id.clone();
            blocks.push(block);
            if rng.gen_bool(0.6) {
                let mut caption = Block::new(next_id(&mut block_no), BlockCategory::TableCaption, place(&mut y, 16.0));
                caption.content = Some(format!("Table {}: {}", order + 1, sentence(rng, language)));
                caption.affiliation = Some(id.clone());
                manifest.count_block(caption.category);
                blocks.push(caption);
            }
            figure_or_table = Some(id);
        } else if roll < 96 {
            let mut block = Block::new(next_id(&mut block_no), BlockCategory::Figure, place(&mut y, 90.0));
            block.order = Some(order);
            manifest.count_block(block.category);
            let id = block.id.clone();
            blocks.push(block);
            if rng.gen_bool(0.7) {
                let mut caption = Block::new(next_id(&mut block_no), BlockCategory::FigureCaption, place(&mut y, 16.0));
                caption.content = Some(format!("Figure {}: {}", order + 1, sentence(rng, language)));
                caption.affiliation = Some(id.clone());
                manifest.count_block(caption.category);
                blocks.push(caption);
            }
            figure_or_table = Some(id);
        } else {
            let mut block = Block::new(next_id(&mut block_no), BlockCategory::CodeBlock, place(&mut y, 40.0));
            block.content = Some(CODE_SNIPPETS[rng.gen_range(0..CODE_SNIPPETS.len())].to_owned());
            block.order = Some(order);
            manifest.count_block(block.category);
            blocks.push(block);
        }
        order += 1;
    }
    let _ = figure_or_table;

    if rng.gen_bool(0.2) {
        let mut masked = Block::new(next_id(&mut block_no), BlockCategory::OtherAbandoned, place(&mut y, 14.0));
        masked.content = rng.gen_bool(0.5).then(|| sentence(rng, language));
        manifest.count_block(masked.category);
        blocks.push(masked);
    }

    if rng.gen_bool(0.6) {
        let mut footer = Block::new(next_id(&mut block_no), BlockCategory::Footer, BBox::new(36.0, 770.0, 560.0, 788.0));
        footer.content = Some("Press and Publication House".to_owned());
        footer.text_attributes = Some(text_attributes(rng, language));
        manifest.count_block(footer.category);
        blocks.push(footer);
    }
    if rng.gen_bool(0.8) {
        let mut number = Block::new(next_id(&mut block_no), BlockCategory::PageNumber, BBox::new(290.0, 792.0, 320.0, 806.0));
        number.content = Some(format!("{}", index + 1));
        manifest.count_block(number.category);
        blocks.push(number);
    }

    GroundTruthPage {
        page_id: format!("page_{index:04}"),
        attributes: PageAttributes { pdf_type, layout_type, language, special_issues },
        blocks,
    }
}

/// Write a corpus to disk in the layout the CLI consumes: `gt.json`,
/// `manifest.json`, and `preds/<page_id>.md` holding the page's own
/// serialized markdown (an identity prediction).
pub fn write_corpus_files(dir: &Path, corpus: &FixtureCorpus) -> Result<()> {
    let io_err = |source| EvalError::Io { path: dir.to_owned(), source };
    std::fs::create_dir_all(dir.join("preds")).map_err(io_err)?;
    let gt_json = serde_json::to_string_pretty(&corpus.dataset).expect("dataset serializes");
    std::fs::write(dir.join("gt.json"), gt_json).map_err(io_err)?;
    let manifest_json = serde_json::to_string_pretty(&corpus.manifest).expect("manifest serializes");
    std::fs::write(dir.join("manifest.json"), manifest_json).map_err(io_err)?;
    for page in &corpus.dataset.pages {
        let md = crate::annotation::gt_page_to_markdown(page)?;
        std::fs::write(dir.join("preds").join(format!("{}.md", page.page_id)), md).map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{dataset_stats, validate};

    #[test]
    fn generated_corpus_is_valid() {
        let corpus = corpus(30, 42);
        let report = validate(&corpus.dataset);
        assert!(report.is_clean(), "{:?}", report.findings);
    }

    #[test]
    fn generation_is_deterministic() {
        let a = corpus(10, 7);
        let b = corpus(10, 7);
        assert_eq!(a.dataset, b.dataset);
        assert_eq!(a.manifest, b.manifest);
    }

    #[test]
    fn manifest_matches_stats() {
        let corpus = corpus(25, 3);
        let stats = dataset_stats(&corpus.dataset);
        assert_eq!(stats.total_pages, corpus.manifest.pages);
        assert_eq!(stats.pages_by_pdf_type, corpus.manifest.pages_by_pdf_type);
        assert_eq!(stats.blocks_by_category, corpus.manifest.blocks_by_category);
        assert_eq!(stats.spans_by_category, corpus.manifest.spans_by_category);
    }

    #[test]
    fn corpus_roundtrips_through_json() {
        let corpus = corpus(8, 11);
        let dir = std::env::temp_dir().join("doceval_fixture_roundtrip");
        write_corpus_files(&dir, &corpus).unwrap();
        let loaded = crate::annotation::load_dataset(&dir.join("gt.json")).unwrap();
        assert_eq!(loaded, corpus.dataset);
    }
}
