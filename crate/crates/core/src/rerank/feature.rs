use rayon::prelude::*;

use crate::edgemap::EdgeStructures;
use crate::imgio::BoundingBox;
use crate::objectness::BoxScorer;

pub const FEATURE_DIM: usize = 10;

pub type RerankFeature = [f64; FEATURE_DIM];

/// Haar-like cells of `b`: full, left, right, top, bottom, the quadrants
/// (top-left, top-right, bottom-left, bottom-right), centred half box.
pub fn partition_box(b: &BoundingBox) -> [BoundingBox; FEATURE_DIM] {
    let (x, y, w, h) = (b.x, b.y, b.w, b.h);
    let (hw, hh) = (w / 2.0, h / 2.0);
    [
        *b,
        BoundingBox::new(x, y, hw, h),
        BoundingBox::new(x + hw, y, hw, h),
        BoundingBox::new(x, y, w, hh),
        BoundingBox::new(x, y + hh, w, hh),
        BoundingBox::new(x, y, hw, hh),
        BoundingBox::new(x + hw, y, hw, hh),
        BoundingBox::new(x, y + hh, hw, hh),
        BoundingBox::new(x + hw, y + hh, hw, hh),
        BoundingBox::new(x + w / 4.0, y + h / 4.0, hw, hh),
    ]
}

pub(crate) fn feature_with(sc: &mut BoxScorer<'_>, b: &BoundingBox) -> RerankFeature {
    partition_box(b).map(|cell| sc.score(&cell))
}

/// Objectness of each cell of [`partition_box`].
pub fn rerank_feature(b: &BoundingBox, es: &EdgeStructures, kappa: f64) -> RerankFeature {
    feature_with(&mut BoxScorer::new(es, kappa), b)
}

/// Features of many boxes, computed in parallel, in input order.
pub fn rerank_features(boxes: &[BoundingBox], es: &EdgeStructures, kappa: f64) -> Vec<RerankFeature> {
    boxes
        .par_iter()
        .map_init(|| BoxScorer::new(es, kappa), feature_with)
        .collect()
}
