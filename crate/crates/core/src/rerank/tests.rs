use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

use super::pegasos::{objective, train};
use super::*;
use crate::edgemap::EdgeConfig;
use crate::imgio::Image;
use crate::objectness::{propose, score_box, ProposalConfig};

fn draw_ring(mag: &mut [f64], ori: &mut [f64], frame: usize, x0: usize, y0: usize, side: usize) {
    let (x1, y1) = (x0 + side - 1, y0 + side - 1);
    for y in y0..=y1 {
        for x in x0..=x1 {
            let on_h = y == y0 || y == y1;
            let on_v = x == x0 || x == x1;
            if on_h || on_v {
                mag[y * frame + x] = 1.0;
                ori[y * frame + x] = if on_h && !on_v { FRAC_PI_2 } else { 0.0 };
            }
        }
    }
}

fn rings(frame: usize, list: &[(usize, usize, usize)]) -> EdgeStructures {
    let mut mag = vec![0.0; frame * frame];
    let mut ori = vec![0.0; frame * frame];
    for &(x, y, s) in list {
        draw_ring(&mut mag, &mut ori, frame, x, y, s);
    }
    EdgeStructures::from_thinned(frame, frame, mag, ori, &EdgeConfig::default())
}

#[test]
fn partition_layout() {
    let p = partition_box(&BoundingBox::new(0.0, 0.0, 100.0, 100.0));
    assert_eq!(p[0], BoundingBox::new(0.0, 0.0, 100.0, 100.0));
    assert_eq!(p[1], BoundingBox::new(0.0, 0.0, 50.0, 100.0));
    assert_eq!(p[9], BoundingBox::new(25.0, 25.0, 50.0, 50.0));
    assert_eq!(p[1].area() + p[2].area(), p[0].area());
    assert_eq!(p[1].intersection_area(&p[2]), 0.0);
    let quads: f64 = p[5..9].iter().map(BoundingBox::area).sum();
    assert_eq!(quads, p[0].area());
}

#[test]
fn tiny_box_quadrants_are_degenerate() {
    let es = rings(16, &[(2, 2, 8)]);
    let f = rerank_feature(&BoundingBox::new(3.0, 3.0, 3.0, 3.0), &es, 1.5);
    assert!(f[5..9].iter().all(|&v| v == 0.0));
}

#[test]
fn blank_frame_gives_zero_feature() {
    let es = EdgeStructures::build(&Image::new_gray(40, 40, 7), &EdgeConfig::default());
    assert_eq!(rerank_feature(&BoundingBox::new(5.0, 5.0, 20.0, 20.0), &es, 1.5), [0.0; 10]);
}

#[test]
fn left_side_cells_dominate_for_left_contours() {
    let es = rings(96, &[(12, 12, 14), (12, 50, 14)]);
    let b = BoundingBox::new(8.0, 8.0, 70.0, 72.0);
    let f = rerank_feature(&b, &es, 1.5);
    for (i, cell) in partition_box(&b).iter().enumerate() {
        assert!((f[i] - score_box(cell, &es, 1.5)).abs() < 1e-12);
    }
    assert!(f[1] > f[2]);
    assert!(f[5] > f[6]);
    assert!(f[7] > f[8]);
    assert!(f[1] > 0.0 && f[5] > 0.0 && f[7] > 0.0);
}

fn separable_fixture() -> (EdgeStructures, BoundingBox, Vec<ScoredBox>) {
    let es = rings(128, &[(50, 40, 20)]);
    let b1 = BoundingBox::new(48.0, 38.0, 24.0, 24.0);
    let pool = propose(&es, &b1, &ProposalConfig::default());
    (es, b1, pool)
}

#[test]
fn init_separates_estimate_from_negatives() {
    let (es, b1, pool) = separable_fixture();
    let cfg = RerankConfig::default();
    let model = init_rerank(&b1, &pool, &es, 1.5, &cfg);
    assert!(!model.is_zero());
    let pos = model.decision(&rerank_feature(&b1, &es, 1.5));
    let negs: Vec<BoundingBox> = pool
        .iter()
        .take(200)
        .map(|s| s.bbox)
        .filter(|b| b.iou(&b1) < 0.5)
        .collect();
    assert!(!negs.is_empty());
    for f in rerank_features(&negs, &es, 1.5) {
        assert!(pos > model.decision(&f));
    }
    let trace = &model.trace;
    assert_eq!(trace.len(), 51);
    assert!(trace.windows(2).all(|w| w[1].objective <= w[0].objective));
    assert_eq!(model, init_rerank(&b1, &pool, &es, 1.5, &cfg));
}

#[test]
fn empty_pool_keeps_zero_model() {
    let (es, b1, _) = separable_fixture();
    let model = init_rerank(&b1, &[], &es, 1.5, &RerankConfig::default());
    assert!(model.is_zero());
    let pool = vec![
        ScoredBox::new(BoundingBox::new(0.0, 0.0, 10.0, 10.0), 1.0),
        ScoredBox::new(BoundingBox::new(20.0, 0.0, 10.0, 10.0), 2.0),
    ];
    let sel = rerank_select(&pool, &model, &es, 1.5, 200);
    assert_eq!(sel[0].objectness, 2.0);
}

#[test]
fn update_schedule_and_margin_trace() {
    let (es, b1, pool) = separable_fixture();
    let mut model = init_rerank(&b1, &pool, &es, 1.5, &RerankConfig::default());
    let before = model.clone();
    assert!(!update_rerank(&mut model, 7, &b1, &pool, &es, 1.5));
    assert_eq!(model, before);

    let est = b1.translate(1.0, 0.0);
    assert!(update_rerank(&mut model, 10, &est, &pool, &es, 1.5));
    assert_eq!(model.trace.len(), 6);
    for w in model.trace.windows(2) {
        assert!(w[1].objective <= w[0].objective);
        assert!(w[1].positive_margin >= w[0].positive_margin - 1e-12);
    }
    assert!(model.step > before.step);

    let mut lone = before.clone();
    let only = vec![ScoredBox::new(b1, 1.0)];
    assert!(!update_rerank(&mut lone, 10, &b1, &only, &es, 1.5));
    assert_eq!(lone, before);
}

#[test]
fn select_truncates_and_orders() {
    let (es, b1, pool) = separable_fixture();
    let model = init_rerank(&b1, &pool, &es, 1.5, &RerankConfig::default());
    let one = rerank_select(&pool, &model, &es, 1.5, 1);
    assert_eq!(one.len(), 1);
    let all = rerank_select(&pool, &model, &es, 1.5, usize::MAX);
    assert_eq!(all.len(), pool.len());
    assert_eq!(one[0], all[0]);
    assert!(all.windows(2).all(|w| w[0].rerank_score >= w[1].rerank_score));

    let big: Vec<ScoredBox> = (0..500)
        .map(|i| ScoredBox::new(BoundingBox::new((i % 25) as f64 * 4.0, (i / 25) as f64 * 4.0, 8.0, 8.0), 0.1))
        .collect();
    assert_eq!(rerank_select(&big, &model, &es, 1.5, 200).len(), 200);
}

#[test]
fn record_round_trip() {
    let (es, b1, pool) = separable_fixture();
    let model = init_rerank(&b1, &pool, &es, 1.5, &RerankConfig::default());
    let back = RerankModel::from_record(&model.to_record(), RerankConfig::default()).unwrap();
    assert_eq!(back.weights, model.weights);
    assert_eq!(back.bias, model.bias);
    assert_eq!(back.step, model.step);
    assert!(RerankModel::from_record("ebt-rerank v0\n", RerankConfig::default()).is_err());
    assert!(RerankModel::from_record("ebt-rerank v1\nweights 1 2\nbias 0\nstep 1\n", RerankConfig::default()).is_err());
    assert!(RerankModel::from_record("ebt-rerank v1\nbias 0\n", RerankConfig::default()).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn training_never_raises_objective(
        rows in prop::collection::vec((prop::array::uniform10(0.0f64..0.2), any::<bool>()), 2..60),
        epochs in 1usize..20, seed in any::<u64>(), start in 0u64..500)
    {
        let xs: Vec<_> = rows.iter().map(|(x, _)| pegasos::augment(x)).collect();
        let mut ys: Vec<f64> = rows.iter().map(|&(_, p)| if p { 1.0 } else { -1.0 }).collect();
        ys[0] = 1.0;
        let mut w = [0.0; 11];
        let mut step = start;
        let before = objective(&w, &xs, &ys, 1e-3);
        let trace = train(&mut w, &mut step, &xs, &ys, 1e-3, epochs, seed, 0);
        prop_assert!(objective(&w, &xs, &ys, 1e-3) <= before);
        prop_assert_eq!(step, start + (epochs * xs.len()) as u64);
        prop_assert_eq!(trace.len(), epochs + 1);
    }

    #[test]
    fn select_returns_subset(n in 0usize..40, h in 1usize..50, seed in 0u64..100) {
        let es = rings(64, &[(10, 10, 12), (30, 30, 16)]);
        let pool: Vec<ScoredBox> = (0..n)
            .map(|i| ScoredBox::new(
                BoundingBox::new(((i as u64 * 7 + seed) % 40) as f64, ((i as u64 * 13 + seed) % 40) as f64, 20.0, 20.0),
                i as f64 * 0.01))
            .collect();
        let model = init_rerank(&BoundingBox::new(8.0, 8.0, 16.0, 16.0), &pool, &es, 1.5, &RerankConfig::default());
        let sel = rerank_select(&pool, &model, &es, 1.5, h);
        prop_assert!(sel.len() <= h.min(n));
        for s in &sel {
            prop_assert!(pool.iter().any(|p| p.bbox == s.bbox && p.objectness == s.objectness));
        }
    }
}
