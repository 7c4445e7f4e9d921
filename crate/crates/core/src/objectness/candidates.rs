use std::collections::HashSet;

use rand::Rng;

use super::ProposalConfig;
use crate::imgio::BoundingBox;

/// Sliding-window candidates over the whole frame.
///
/// Widths and heights are independent geometric grids `prev * alpha^k`,
/// `|k| <= aspect_steps`, filtered to the allowed area band around the
/// previous box. Each size is swept over the frame with stride
/// `(1 - alpha) * min(w, h)` (at least 1 px). Coordinates are whole pixels.
pub fn generate_candidates(
    prev: &BoundingBox,
    frame_w: usize,
    frame_h: usize,
    cfg: &ProposalConfig,
) -> Vec<BoundingBox> {
    let prev_area = prev.area();
    let k = cfg.aspect_steps as i32;
    let mut sizes: Vec<(usize, usize)> = Vec::new();
    for kw in -k..=k {
        let w = (prev.w * cfg.alpha.powi(kw)).round().max(1.0) as usize;
        for kh in -k..=k {
            let h = (prev.h * cfg.alpha.powi(kh)).round().max(1.0) as usize;
            let area = (w * h) as f64;
            if area < cfg.area_min * prev_area || area > cfg.area_max * prev_area {
                continue;
            }
            if w > frame_w || h > frame_h {
                continue;
            }
            sizes.push((w, h));
        }
    }
    sizes.sort_unstable();
    sizes.dedup();

    let mut out = Vec::new();
    for (w, h) in sizes {
        let step = ((1.0 - cfg.alpha) * w.min(h) as f64).max(1.0);
        let xs = positions(frame_w - w, step);
        let ys = positions(frame_h - h, step);
        for &y in &ys {
            for &x in &xs {
                out.push(BoundingBox::new(x as f64, y as f64, w as f64, h as f64));
            }
        }
    }
    out
}

/// `round(i * step)` for all `i` with the result in `0..=max`, deduplicated.
fn positions(max: usize, step: f64) -> Vec<usize> {
    let mut v = Vec::new();
    let mut i = 0usize;
    loop {
        let p = (i as f64 * step).round() as usize;
        if p > max {
            break;
        }
        if v.last() != Some(&p) {
            v.push(p);
        }
        i += 1;
    }
    v
}

/// `count` boxes of `prev`'s size with centres uniform in the disc of
/// `radius` around `prev`'s centre, shifted inside the frame.
pub fn sample_local<R: Rng + ?Sized>(
    prev: &BoundingBox,
    radius: f64,
    count: usize,
    frame_w: usize,
    frame_h: usize,
    rng: &mut R,
) -> Vec<BoundingBox> {
    let (cx, cy) = prev.center();
    (0..count)
        .map(|_| {
            let r = radius * rng.gen::<f64>().sqrt();
            let t = std::f64::consts::TAU * rng.gen::<f64>();
            BoundingBox::from_center(cx + r * t.cos(), cy + r * t.sin(), prev.w, prev.h)
                .clamp_to(frame_w, frame_h)
        })
        .collect()
}

/// Every whole-pixel translation of `prev` (at `step` px spacing) whose
/// centre offset lies within `radius`; duplicates after clamping removed.
pub fn sample_local_dense(
    prev: &BoundingBox,
    radius: f64,
    step: usize,
    frame_w: usize,
    frame_h: usize,
) -> Vec<BoundingBox> {
    let step = step.max(1) as i64;
    let r = radius.floor() as i64;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut dy = -(r / step) * step;
    while dy <= r {
        let mut dx = -(r / step) * step;
        while dx <= r {
            if ((dx * dx + dy * dy) as f64) <= radius * radius {
                let b = prev.translate(dx as f64, dy as f64).clamp_to(frame_w, frame_h);
                if seen.insert((b.x.to_bits(), b.y.to_bits())) {
                    out.push(b);
                }
            }
            dx += step;
        }
        dy += step;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn areas_stay_in_band() {
        let cfg = ProposalConfig::default();
        let prev = BoundingBox::new(100.0, 100.0, 40.0, 40.0);
        let c = generate_candidates(&prev, 320, 240, &cfg);
        assert!(!c.is_empty());
        for b in &c {
            assert!((800.0..=3200.0).contains(&b.area()), "{b}");
            assert!(b.x >= 0.0 && b.y >= 0.0 && b.right() <= 320.0 && b.bottom() <= 240.0);
        }
        let unique: HashSet<_> = c
            .iter()
            .map(|b| (b.x as i64, b.y as i64, b.w as i64, b.h as i64))
            .collect();
        assert_eq!(unique.len(), c.len());
    }

    #[test]
    fn finer_alpha_gives_more_candidates() {
        let prev = BoundingBox::new(100.0, 100.0, 40.0, 40.0);
        let coarse = ProposalConfig {
            alpha: 0.8,
            ..Default::default()
        };
        let fine = ProposalConfig {
            alpha: 0.9,
            ..Default::default()
        };
        assert!(
            generate_candidates(&prev, 320, 240, &fine).len()
                > generate_candidates(&prev, 320, 240, &coarse).len()
        );
    }

    #[test]
    fn tiny_frame_gives_no_candidates() {
        let prev = BoundingBox::new(0.0, 0.0, 40.0, 40.0);
        assert!(generate_candidates(&prev, 20, 20, &ProposalConfig::default()).is_empty());
    }

    #[test]
    fn local_samples_in_disc_and_same_size() {
        let prev = BoundingBox::new(140.0, 100.0, 40.0, 30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let s = sample_local(&prev, 30.0, 80, 320, 240, &mut rng);
        assert_eq!(s.len(), 80);
        for b in &s {
            assert!(b.center_distance(&prev) <= 30.0 + 1e-9);
            assert_eq!((b.w, b.h), (prev.w, prev.h));
        }
        let again = sample_local(&prev, 30.0, 80, 320, 240, &mut ChaCha8Rng::seed_from_u64(7));
        assert_eq!(s, again);
    }

    #[test]
    fn clamping_never_moves_samples_away() {
        let prev = BoundingBox::new(0.0, 0.0, 40.0, 30.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for b in sample_local(&prev, 30.0, 200, 320, 240, &mut rng) {
            assert!(b.center_distance(&prev) <= 30.0 + 1e-9);
            assert!(b.x >= 0.0 && b.y >= 0.0);
        }
    }

    #[test]
    fn dense_samples_cover_the_disc() {
        let prev = BoundingBox::new(100.0, 100.0, 20.0, 20.0);
        let s = sample_local_dense(&prev, 30.0, 1, 320, 240);
        let want = (-30i64..=30)
            .flat_map(|dy| (-30i64..=30).map(move |dx| (dx, dy)))
            .filter(|&(dx, dy)| dx * dx + dy * dy <= 900)
            .count();
        assert_eq!(s.len(), want);
        assert!(s.contains(&prev));
    }
}
