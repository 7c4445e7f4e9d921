use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

/// Textured red square on a noisy blue background.
fn scene(seed: u64, ox: usize, oy: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise: Vec<u8> = (0..160 * 120).map(|_| rng.gen_range(0..48)).collect();
    Image::from_fn_rgb(160, 120, |x, y| {
        let n = noise[y * 160 + x];
        if (ox..ox + 32).contains(&x) && (oy..oy + 32).contains(&y) {
            let stripe = if (x - ox) / 4 % 2 == 0 { 60 } else { 0 };
            [190 + n / 2, 30 + stripe + n / 2, 40]
        } else {
            [40 + n, 70 + n, 140 + n]
        }
    })
}

fn negatives_around(b: &BoundingBox, seed: u64) -> Vec<BoundingBox> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_local(b, 30.0, 80, 160, 120, &mut rng)
}

#[test]
fn smoothness_closed_forms() {
    let prev = BoundingBox::new(10.0, 10.0, 30.0, 40.0);
    assert_eq!(prev.diagonal(), 50.0);
    assert_eq!(smoothness(&prev, &prev, 50.0, 0.1), 0.1);
    let moved = prev.translate(30.0, 40.0);
    assert!((smoothness(&moved, &prev, 50.0, 0.1) - 0.1 * (-0.5f64).exp()).abs() < 1e-15);
    assert!((smoothness(&moved, &prev, 50.0, 0.1) - 0.0606531).abs() < 1e-7);
    assert!(smoothness(&prev.translate(1e4, 0.0), &prev, 50.0, 0.1) < 1e-300);
}

#[test]
fn decision_rule_ties_and_shifts() {
    let prev = BoundingBox::new(50.0, 50.0, 20.0, 20.0);
    let near = prev;
    let far = prev.translate(100.0, 0.0);
    assert_eq!(select_best(&[far, near], &[1.0, 1.0], &prev, 28.0, 0.1).unwrap().0, 1);
    let boxes: Vec<BoundingBox> = (0..7).map(|i| prev.translate(i as f64 * 3.0, 0.0)).collect();
    let scores = [0.3, 0.9, 0.1, 0.95, 0.2, 0.4, 0.0];
    let a = select_best(&boxes, &scores, &prev, 28.0, 0.1).unwrap().0;
    let shifted: Vec<f64> = scores.iter().map(|s| s + 17.0).collect();
    assert_eq!(select_best(&boxes, &shifted, &prev, 28.0, 0.1).unwrap().0, a);
    assert_eq!(select_best(&[far], &[-5.0], &prev, 28.0, 0.1).unwrap().0, 0);
    assert!(select_best(&[], &[], &prev, 28.0, 0.1).is_none());
}

#[test]
fn init_ranks_target_above_negatives() {
    let img = scene(1, 60, 40);
    let b1 = BoundingBox::new(60.0, 40.0, 32.0, 32.0);
    let negs = negatives_around(&b1, 2);
    let t = SsTracker::init(&img, b1, &negs, TrackerConfig::default()).unwrap();
    assert_eq!(t.sigma(), b1.diagonal());
    let pos = t.evaluate(&extract_feature(&img, &b1, 60).unwrap());
    let mut checked = 0;
    for n in negs.iter().filter(|n| n.iou(&b1) < 0.5) {
        assert!(pos > t.evaluate(&extract_feature(&img, n, 60).unwrap()), "{n}");
        checked += 1;
    }
    assert!(checked > 10);
    let again = SsTracker::init(&img, b1, &negs, TrackerConfig::default()).unwrap();
    assert_eq!(t.to_checkpoint(), again.to_checkpoint());
}

#[test]
fn degenerate_initial_box_is_rejected() {
    let img = scene(1, 60, 40);
    let r = SsTracker::init(&img, BoundingBox::new(5.0, 5.0, 3.0, 30.0), &[], TrackerConfig::default());
    assert!(matches!(r, Err(Error::InvalidBox(_))));
    let r = SsTracker::init(&img, BoundingBox::new(500.0, 5.0, 30.0, 30.0), &[], TrackerConfig::default());
    assert!(r.is_err());
}

#[test]
fn follows_a_moving_square() {
    let b1 = BoundingBox::new(40.0, 40.0, 32.0, 32.0);
    let first = scene(10, 40, 40);
    let mut t = SsTracker::init(&first, b1, &negatives_around(&b1, 0), TrackerConfig::default()).unwrap();
    let mut truth = b1;
    for k in 1..12usize {
        let (ox, oy) = (40 + 4 * k, 40 + k);
        let img = scene(10 + k as u64, ox, oy);
        truth = BoundingBox::new(ox as f64, oy as f64, 32.0, 32.0);
        let mut cands = negatives_around(&t.previous(), 100 + k as u64);
        cands.push(truth);
        let est = t.track_step(&img, &cands).unwrap();
        assert!(!est.fallback);
        assert!(est.bbox.iou(&truth) > 0.7, "frame {k}: {}", est.bbox);
        let negs: Vec<BoundingBox> = cands.iter().copied().filter(|c| *c != est.bbox).collect();
        t.update(&img, &est.bbox, &negs).unwrap();
        let s = t.solver();
        assert!(s.num_support_vectors() <= s.config().budget);
        for (_, sum) in s.pattern_sums() {
            assert!(sum.abs() < 1e-9);
        }
        assert!(s.dual_trace.iter().all(|&(a, b)| b >= a - 1e-9 * (1.0 + a.abs())));
    }
    assert_eq!(t.previous(), truth);
}

#[test]
fn empty_candidates_fall_back_to_local_samples() {
    let b1 = BoundingBox::new(60.0, 40.0, 32.0, 32.0);
    let img = scene(3, 60, 40);
    let mut t = SsTracker::init(&img, b1, &negatives_around(&b1, 1), TrackerConfig::default()).unwrap();
    let est = t.track_step(&img, &[]).unwrap();
    assert!(est.fallback);
    assert!(est.bbox.center_distance(&b1) <= 30.0);
}

#[test]
fn checkpoint_resumes_bit_identically() {
    let frames: Vec<Image> = (0..8).map(|k| scene(40 + k as u64, 40 + 3 * k, 50)).collect();
    let b1 = BoundingBox::new(40.0, 50.0, 32.0, 32.0);
    let cfg = TrackerConfig {
        seed: 77,
        ..Default::default()
    };
    let run = |t: &mut SsTracker, from: usize, to: usize| -> Vec<BoundingBox> {
        (from..to)
            .map(|k| {
                let cands = negatives_around(&t.previous(), k as u64);
                let est = t.track_step(&frames[k], if k % 3 == 0 { &[] } else { &cands }).unwrap();
                t.update(&frames[k], &est.bbox, &cands).unwrap();
                est.bbox
            })
            .collect()
    };
    let mut a = SsTracker::init(&frames[0], b1, &negatives_around(&b1, 0), cfg.clone()).unwrap();
    run(&mut a, 1, 4);
    let text = a.to_checkpoint();
    let mut b = SsTracker::from_checkpoint(&text, cfg.clone(), |i| Ok(frames[i].clone())).unwrap();
    assert_eq!(b.to_checkpoint(), text);
    assert_eq!(run(&mut a, 4, 8), run(&mut b, 4, 8));
    assert_eq!(a.to_checkpoint(), b.to_checkpoint());
    assert!(SsTracker::from_checkpoint("nope", cfg, |i| Ok(frames[i].clone())).is_err());
}
