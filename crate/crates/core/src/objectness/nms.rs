use std::cmp::Ordering;

use super::ScoredBox;

/// Descending objectness; ties by smaller area, then `(x, y)`.
pub fn by_objectness(a: &ScoredBox, b: &ScoredBox) -> Ordering {
    b.objectness
        .total_cmp(&a.objectness)
        .then_with(|| a.bbox.tie_order(&b.bbox))
}

/// Greedy non-maximum suppression: walking boxes in descending score order,
/// keep a box iff its IoU with every box kept so far is `<= beta`.
///
/// A kept box can only suppress a candidate whose centre lies within
/// `(1 - beta) / beta` of the candidate's size, so kept boxes are bucketed
/// by centre on a grid and only nearby buckets are checked.
pub fn nms_boxes(mut scored: Vec<ScoredBox>, beta: f64) -> Vec<ScoredBox> {
    scored.sort_by(by_objectness);
    if scored.len() <= 1 {
        return scored;
    }
    let reach = ((1.0 - beta) / beta).max(0.0);
    let (mut minx, mut miny, mut maxx, mut maxy) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for s in &scored {
        let (cx, cy) = s.bbox.center();
        minx = minx.min(cx);
        miny = miny.min(cy);
        maxx = maxx.max(cx);
        maxy = maxy.max(cy);
    }
    let cell = 16.0;
    let gw = ((maxx - minx) / cell).floor() as usize + 1;
    let gh = ((maxy - miny) / cell).floor() as usize + 1;
    // very sparse or degenerate layouts fall back to a single bucket
    let bucketed = gw.saturating_mul(gh) <= 1 << 22;
    let (gw, gh) = if bucketed { (gw, gh) } else { (1, 1) };
    let mut grid: Vec<Vec<u32>> = vec![Vec::new(); gw * gh];
    let cell_of = |v: f64, lo: f64, n: usize| -> usize {
        if !bucketed {
            return 0;
        }
        (((v - lo) / cell).floor().max(0.0) as usize).min(n - 1)
    };

    let mut kept: Vec<ScoredBox> = Vec::new();
    for cand in scored {
        let (cx, cy) = cand.bbox.center();
        let rx = reach * cand.bbox.w + 1e-9;
        let ry = reach * cand.bbox.h + 1e-9;
        let (gx0, gx1) = (cell_of(cx - rx, minx, gw), cell_of(cx + rx, minx, gw));
        let (gy0, gy1) = (cell_of(cy - ry, miny, gh), cell_of(cy + ry, miny, gh));
        let mut suppressed = false;
        'scan: for gy in gy0..=gy1 {
            for gx in gx0..=gx1 {
                for &k in &grid[gy * gw + gx] {
                    if kept[k as usize].bbox.iou(&cand.bbox) > beta {
                        suppressed = true;
                        break 'scan;
                    }
                }
            }
        }
        if !suppressed {
            let slot = cell_of(cy, miny, gh) * gw + cell_of(cx, minx, gw);
            grid[slot].push(kept.len() as u32);
            kept.push(cand);
        }
    }
    kept
}
