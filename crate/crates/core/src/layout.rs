//! Layout-detection evaluation: IoU matching and COCO-style mAP per
//! category, overall and grouped by page type.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::annotation::{BBox, BlockCategory, Dataset};
use crate::error::{EvalError, Result};

/// IoU thresholds averaged by default: 0.50 to 0.95 in steps of 0.05.
pub fn default_iou_thresholds() -> Vec<f64> {
    (0..10).map(|i| 0.5 + 0.05 * i as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub page_id: String,
    pub category: BlockCategory,
    pub bbox: BBox,
    pub confidence: f64,
}

#[derive(Debug, Clone)]
pub struct MapConfig {
    pub iou_thresholds: Vec<f64>,
    /// Categories excluded from evaluation on top of the always-excluded
    /// masked ones.
    pub excluded_categories: HashSet<BlockCategory>,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig { iou_thresholds: default_iou_thresholds(), excluded_categories: HashSet::new() }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct APResult {
    /// Average precision per category, over the configured IoU thresholds.
    pub per_category: BTreeMap<String, f64>,
    /// Mean AP over categories present in each page type's ground truth.
    pub per_page_type: BTreeMap<String, f64>,
    /// Mean AP over categories present in the ground truth.
    pub overall: f64,
}

/// Intersection over union of two boxes; 0 when disjoint.
pub fn iou(a: &BBox, b: &BBox) -> f64 {
    let ix = (a.x1.min(b.x1) - a.x0.max(b.x0)).max(0.0);
    let iy = (a.y1.min(b.y1) - a.y0.max(b.y0)).max(0.0);
    let inter = ix * iy;
    if inter <= 0.0 {
        return 0.0;
    }
    inter / (a.area() + b.area() - inter)
}

#[derive(Deserialize)]
struct RawDetection {
    page_id: String,
    category: String,
    bbox: [f64; 4],
    confidence: f64,
}

/// Load a detections file: a JSON list of
/// `{"page_id", "category", "bbox", "confidence"}` records.
pub fn load_detections(path: &Path) -> Result<Vec<Detection>> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| EvalError::Io { path: path.to_owned(), source })?;
    let raw: Vec<RawDetection> = serde_json::from_str(&text)
        .map_err(|source| EvalError::Json { path: path.to_owned(), source })?;
    raw.into_iter()
        .map(|r| {
            let category: BlockCategory = r
                .category
                .parse()
                .map_err(|msg| EvalError::schema(&r.page_id, None, msg))?;
            let bbox: BBox = r.bbox.into();
            if !bbox.is_well_formed() {
                return Err(EvalError::schema(&r.page_id, None, "detection bbox is malformed"));
            }
            if !(0.0..=1.0).contains(&r.confidence) {
                return Err(EvalError::schema(
                    &r.page_id,
                    None,
                    format!("confidence {} outside [0, 1]", r.confidence),
                ));
            }
            Ok(Detection { page_id: r.page_id, category, bbox, confidence: r.confidence })
        })
        .collect()
}

/// Evaluate detections against a dataset: per-category AP, overall mAP, and
/// mAP grouped by page type.
pub fn evaluate_map(
    dataset: &Dataset,
    detections: &[Detection],
    config: &MapConfig,
) -> Result<APResult> {
    let page_ids: HashSet<&str> = dataset.pages.iter().map(|p| p.page_id.as_str()).collect();
    for det in detections {
        if !page_ids.contains(det.page_id.as_str()) {
            return Err(EvalError::UnknownPage(det.page_id.clone()));
        }
    }

    let all_pages: Vec<&str> = dataset.pages.iter().map(|p| p.page_id.as_str()).collect();
    let per_category = category_aps(dataset, detections, config, &all_pages);
    let overall = mean(per_category.values().copied());

    let mut per_page_type = BTreeMap::new();
    let pdf_types: BTreeSet<&str> =
        dataset.pages.iter().map(|p| p.attributes.pdf_type.as_str()).collect();
    for pdf_type in pdf_types {
        let pages: Vec<&str> = dataset
            .pages
            .iter()
            .filter(|p| p.attributes.pdf_type.as_str() == pdf_type)
            .map(|p| p.page_id.as_str())
            .collect();
        let aps = category_aps(dataset, detections, config, &pages);
        if !aps.is_empty() {
            per_page_type.insert(pdf_type.to_owned(), mean(aps.values().copied()));
        }
    }

    Ok(APResult { per_category, per_page_type, overall })
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let values: Vec<f64> = values.collect();
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// AP per category over the given page subset, categories with ground truth
/// only.
fn category_aps(
    dataset: &Dataset,
    detections: &[Detection],
    config: &MapConfig,
    pages: &[&str],
) -> BTreeMap<String, f64> {
    let page_set: HashSet<&str> = pages.iter().copied().collect();
    let eligible = |cat: BlockCategory| {
        cat.is_block_level() && !config.excluded_categories.contains(&cat)
    };

    // Ground-truth boxes per (category, page).
    let mut gt_boxes: HashMap<(BlockCategory, &str), Vec<BBox>> = HashMap::new();
    for page in dataset.pages.iter().filter(|p| page_set.contains(p.page_id.as_str())) {
        for block in &page.blocks {
            if eligible(block.category) {
                gt_boxes
                    .entry((block.category, page.page_id.as_str()))
                    .or_default()
                    .push(block.bbox);
            }
        }
    }

    let categories: BTreeSet<BlockCategory> = gt_boxes.keys().map(|&(c, _)| c).collect();
    let mut result = BTreeMap::new();
    for &category in &categories {
        let mut dets: Vec<&Detection> = detections
            .iter()
            .filter(|d| d.category == category && page_set.contains(d.page_id.as_str()))
            .collect();
        // Descending confidence; ties resolved by page then geometry so the
        // result is independent of input order.
        dets.sort_by(|a, b| {
            b.confidence
                .total_cmp(&a.confidence)
                .then_with(|| a.page_id.cmp(&b.page_id))
                .then_with(|| a.bbox.x0.total_cmp(&b.bbox.x0))
                .then_with(|| a.bbox.y0.total_cmp(&b.bbox.y0))
                .then_with(|| a.bbox.x1.total_cmp(&b.bbox.x1))
                .then_with(|| a.bbox.y1.total_cmp(&b.bbox.y1))
        });
        let n_gt: usize = gt_boxes
            .iter()
            .filter(|((c, _), _)| *c == category)
            .map(|(_, boxes)| boxes.len())
            .sum();
        let ap_sum: f64 = config
            .iou_thresholds
            .iter()
            .map(|&t| ap_at_threshold(&dets, &gt_boxes, category, t, n_gt))
            .sum();
        result.insert(category.as_str().to_owned(), ap_sum / config.iou_thresholds.len() as f64);
    }
    result
}

fn ap_at_threshold(
    dets: &[&Detection],
    gt_boxes: &HashMap<(BlockCategory, &str), Vec<BBox>>,
    category: BlockCategory,
    threshold: f64,
    n_gt: usize,
) -> f64 {
    if n_gt == 0 {
        return 0.0;
    }
    let mut matched: HashMap<&str, Vec<bool>> = HashMap::new();
    let mut tp_flags = Vec::with_capacity(dets.len());
    for det in dets {
        let boxes = gt_boxes.get(&(category, det.page_id.as_str()));
        let mut best: Option<(usize, f64)> = None;
        if let Some(boxes) = boxes {
            let taken = matched.entry(det.page_id.as_str()).or_insert_with(|| vec![false; boxes.len()]);
            for (g, gt) in boxes.iter().enumerate() {
                if taken[g] {
                    continue;
                }
                let overlap = iou(&det.bbox, gt);
                // Highest IoU wins; equal IoU goes to the lower GT index.
                if overlap >= threshold && best.map_or(true, |(_, b)| overlap > b) {
                    best = Some((g, overlap));
                }
            }
        }
        match best {
            Some((g, _)) => {
                matched.get_mut(det.page_id.as_str()).unwrap()[g] = true;
                tp_flags.push(true);
            }
            None => tp_flags.push(false),
        }
    }

    // Operating points exist only at confidence boundaries: detections tied
    // on confidence are one atomic prefix, so a duplicate of a perfect
    // detection genuinely drags precision down.
    let mut points: Vec<(f64, f64)> = Vec::new();
    let mut tp = 0usize;
    let mut seen = 0usize;
    for (k, &is_tp) in tp_flags.iter().enumerate() {
        tp += usize::from(is_tp);
        seen += 1;
        let boundary = k + 1 == dets.len()
            || dets[k + 1].confidence.total_cmp(&dets[k].confidence).is_lt();
        if boundary {
            points.push((tp as f64 / n_gt as f64, tp as f64 / seen as f64));
        }
    }

    // 101-point interpolated area under the precision-recall curve.
    let mut ap = 0.0;
    for r in 0..=100 {
        let recall = r as f64 / 100.0;
        let best = points
            .iter()
            .filter(|&&(rc, _)| rc >= recall - 1e-12)
            .map(|&(_, p)| p)
            .fold(0.0f64, f64::max);
        ap += best;
    }
    ap / 101.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotation::{Block, GroundTruthPage, Language, LayoutType, PageAttributes, PdfType};

    fn bbox(x0: f64, y0: f64, x1: f64, y1: f64) -> BBox {
        BBox::new(x0, y0, x1, y1)
    }

    fn page_with(page_id: &str, pdf_type: PdfType, blocks: Vec<Block>) -> GroundTruthPage {
        GroundTruthPage {
            page_id: page_id.to_owned(),
            attributes: PageAttributes {
                pdf_type,
                layout_type: LayoutType::SingleColumn,
                language: Language::En,
                special_issues: vec![],
            },
            blocks,
        }
    }

    fn gt_block(id: &str, category: BlockCategory, b: BBox) -> Block {
        Block::new(id, category, b)
    }

    #[test]
    fn iou_basic_cases() {
        let unit = bbox(0.0, 0.0, 1.0, 1.0);
        assert_eq!(iou(&unit, &unit), 1.0);
        assert_eq!(iou(&unit, &bbox(2.0, 2.0, 3.0, 3.0)), 0.0);
        // Unit squares overlapping on half their area.
        let shifted = bbox(0.5, 0.0, 1.5, 1.0);
        assert!((iou(&unit, &shifted) - 1.0 / 3.0).abs() < 1e-12);
        // Touching edges intersect with zero area.
        assert_eq!(iou(&unit, &bbox(1.0, 0.0, 2.0, 1.0)), 0.0);
    }

    fn simple_dataset() -> Dataset {
        Dataset {
            pages: vec![page_with(
                "p0",
                PdfType::Book,
                vec![
                    {
                        let mut b = gt_block("b0", BlockCategory::TextBlock, bbox(0.0, 0.0, 100.0, 50.0));
                        b.content = Some("x".into());
                        b.order = Some(0);
                        b
                    },
                    {
                        let mut b = gt_block("b1", BlockCategory::Figure, bbox(0.0, 60.0, 100.0, 120.0));
                        b.order = Some(1);
                        b
                    },
                ],
            )],
        }
    }

    fn det(page: &str, category: BlockCategory, b: BBox, conf: f64) -> Detection {
        Detection { page_id: page.to_owned(), category, bbox: b, confidence: conf }
    }

    #[test]
    fn perfect_detections_score_one() {
        let ds = simple_dataset();
        let dets = vec![
            det("p0", BlockCategory::TextBlock, bbox(0.0, 0.0, 100.0, 50.0), 1.0),
            det("p0", BlockCategory::Figure, bbox(0.0, 60.0, 100.0, 120.0), 1.0),
        ];
        let result = evaluate_map(&ds, &dets, &MapConfig::default()).unwrap();
        assert_eq!(result.overall, 1.0);
        assert_eq!(result.per_category["text_block"], 1.0);
        assert_eq!(result.per_page_type["book"], 1.0);
    }

    #[test]
    fn empty_detections_score_zero() {
        let ds = simple_dataset();
        let result = evaluate_map(&ds, &[], &MapConfig::default()).unwrap();
        assert_eq!(result.overall, 0.0);
    }

    #[test]
    fn one_of_two_categories_scores_half() {
        let ds = simple_dataset();
        let dets = vec![det("p0", BlockCategory::TextBlock, bbox(0.0, 0.0, 100.0, 50.0), 1.0)];
        let result = evaluate_map(&ds, &dets, &MapConfig::default()).unwrap();
        assert!((result.overall - 0.5).abs() < 1e-12);
    }

    #[test]
    fn duplicate_detection_strictly_lowers_ap() {
        let ds = simple_dataset();
        let single = vec![det("p0", BlockCategory::TextBlock, bbox(0.0, 0.0, 100.0, 50.0), 1.0)];
        let mut doubled = single.clone();
        doubled.push(single[0].clone());
        let config = MapConfig::default();
        let ap_single = evaluate_map(&ds, &single, &config).unwrap().per_category["text_block"];
        let ap_double = evaluate_map(&ds, &doubled, &config).unwrap().per_category["text_block"];
        assert!(ap_double < ap_single, "{ap_double} !< {ap_single}");
    }

    #[test]
    fn equal_confidence_permutation_invariance() {
        let ds = simple_dataset();
        let a = det("p0", BlockCategory::TextBlock, bbox(0.0, 0.0, 100.0, 50.0), 0.9);
        let b = det("p0", BlockCategory::TextBlock, bbox(0.0, 0.0, 90.0, 50.0), 0.9);
        let config = MapConfig::default();
        let forward = evaluate_map(&ds, &[a.clone(), b.clone()], &config).unwrap();
        let backward = evaluate_map(&ds, &[b, a], &config).unwrap();
        assert_eq!(forward, backward);
    }

    #[test]
    fn masked_categories_never_contribute() {
        let mut ds = simple_dataset();
        ds.pages[0]
            .blocks
            .push(gt_block("m0", BlockCategory::OtherAbandoned, bbox(0.0, 130.0, 50.0, 150.0)));
        let dets = vec![
            det("p0", BlockCategory::TextBlock, bbox(0.0, 0.0, 100.0, 50.0), 1.0),
            det("p0", BlockCategory::Figure, bbox(0.0, 60.0, 100.0, 120.0), 1.0),
            det("p0", BlockCategory::OtherAbandoned, bbox(0.0, 130.0, 50.0, 150.0), 1.0),
        ];
        let result = evaluate_map(&ds, &dets, &MapConfig::default()).unwrap();
        assert!(!result.per_category.contains_key("other_abandoned"));
        assert_eq!(result.overall, 1.0);
    }

    #[test]
    fn unknown_page_is_an_error() {
        let ds = simple_dataset();
        let dets = vec![det("nope", BlockCategory::TextBlock, bbox(0.0, 0.0, 1.0, 1.0), 0.5)];
        assert!(matches!(
            evaluate_map(&ds, &dets, &MapConfig::default()),
            Err(EvalError::UnknownPage(_))
        ));
    }

    #[test]
    fn map_always_within_unit_interval() {
        let ds = simple_dataset();
        let dets = vec![
            det("p0", BlockCategory::TextBlock, bbox(10.0, 10.0, 60.0, 40.0), 0.8),
            det("p0", BlockCategory::TextBlock, bbox(0.0, 0.0, 100.0, 50.0), 0.4),
            det("p0", BlockCategory::Figure, bbox(0.0, 60.0, 50.0, 120.0), 0.6),
        ];
        let r = evaluate_map(&ds, &dets, &MapConfig::default()).unwrap();
        assert!((0.0..=1.0).contains(&r.overall));
        for ap in r.per_category.values() {
            assert!((0.0..=1.0).contains(ap));
        }
    }
}
