use crate::imgio::Image;

/// Largest Sobel magnitude an 8-bit image can produce: `255 * sqrt(20)`,
/// reached e.g. by gx = 4*255, gy = 2*255.
pub const SOBEL_MAX: f64 = 1140.3946685248927;

/// Per-pixel gradient magnitude in `[0, 1]` and orientation in `[0, pi)`.
#[derive(Debug, Clone)]
pub struct GradientMaps {
    pub width: usize,
    pub height: usize,
    pub magnitude: Vec<f64>,
    /// Gradient direction folded to `[0, pi)`; the edge tangent is perpendicular.
    pub orientation: Vec<f64>,
}

#[inline]
pub(crate) fn fold_pi(theta: f64) -> f64 {
    let mut t = theta % std::f64::consts::PI;
    if t < 0.0 {
        t += std::f64::consts::PI;
    }
    if t >= std::f64::consts::PI {
        t -= std::f64::consts::PI;
    }
    t
}

/// 3x3 Sobel with replicated borders. RGB input is converted to luma first.
pub fn compute_gradients(img: &Image) -> GradientMaps {
    let (w, h) = (img.width(), img.height());
    let gray: Vec<i32> = if img.is_gray() {
        img.data().iter().map(|&v| v as i32).collect()
    } else {
        img.data()
            .chunks_exact(3)
            .map(|p| crate::imgio::luma(p[0], p[1], p[2]) as i32)
            .collect()
    };
    let at = |x: isize, y: isize| -> i32 {
        let xc = x.clamp(0, w as isize - 1) as usize;
        let yc = y.clamp(0, h as isize - 1) as usize;
        gray[yc * w + xc]
    };
    let mut magnitude = vec![0.0; w * h];
    let mut orientation = vec![0.0; w * h];
    for y in 0..h as isize {
        for x in 0..w as isize {
            let gx = (at(x + 1, y - 1) + 2 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x - 1, y) + at(x - 1, y + 1));
            let gy = (at(x - 1, y + 1) + 2 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2 * at(x, y - 1) + at(x + 1, y - 1));
            if gx == 0 && gy == 0 {
                continue;
            }
            let i = y as usize * w + x as usize;
            let (gx, gy) = (gx as f64, gy as f64);
            magnitude[i] = (gx.hypot(gy) / SOBEL_MAX).min(1.0);
            orientation[i] = fold_pi(gy.atan2(gx));
        }
    }
    GradientMaps {
        width: w,
        height: h,
        magnitude,
        orientation,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sobel_max_is_attained_over_binary_patches() {
        // The magnitude is convex in the 9 pixels, so its maximum over
        // [0,255]^9 sits at a vertex: enumerate all 0/255 patches.
        let mut best = 0.0f64;
        for bits in 0u32..512 {
            let p = |k: u32| if bits >> k & 1 == 1 { 255i32 } else { 0 };
            // p(r*3+c)
            let gx = (p(2) + 2 * p(5) + p(8)) - (p(0) + 2 * p(3) + p(6));
            let gy = (p(6) + 2 * p(7) + p(8)) - (p(0) + 2 * p(1) + p(2));
            best = best.max((gx as f64).hypot(gy as f64));
        }
        assert!((best - SOBEL_MAX).abs() < 1e-9, "{best}");
    }

    #[test]
    fn constant_image_has_zero_gradient() {
        let g = compute_gradients(&Image::new_gray(8, 6, 77));
        assert!(g.magnitude.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn vertical_step_responds_next_to_the_step_only() {
        let img = Image::from_fn_gray(10, 6, |x, _| if x < 5 { 0 } else { 255 });
        let g = compute_gradients(&img);
        for y in 0..6 {
            for x in 0..10 {
                let m = g.magnitude[y * 10 + x];
                if x == 4 || x == 5 {
                    assert!((m - 1020.0 / SOBEL_MAX).abs() < 1e-12);
                    assert_eq!(g.orientation[y * 10 + x], 0.0);
                } else {
                    assert_eq!(m, 0.0, "x={x}");
                }
            }
        }
    }

    #[test]
    fn diagonal_step_is_quarter_pi() {
        // 5x5 fixture, bright where x + y > 4.
        let img = Image::from_fn_gray(5, 5, |x, y| if x + y > 4 { 255 } else { 0 });
        let g = compute_gradients(&img);
        let c = 2 * 5 + 2;
        assert!(g.magnitude[c] > 0.0);
        assert!((g.orientation[c] - PI / 4.0).abs() < 1e-12);
        // right column (0, 255, 255) and bottom row (0, 255, 255): gx = gy = 765
        let want = (765.0f64).hypot(765.0) / SOBEL_MAX;
        assert!((g.magnitude[c] - want).abs() < 1e-12);
    }

    #[test]
    fn magnitude_invariant_to_offset() {
        let a = Image::from_fn_gray(9, 7, |x, y| ((x * 13 + y * 29) % 200) as u8);
        let b = Image::from_fn_gray(9, 7, |x, y| ((x * 13 + y * 29) % 200 + 40) as u8);
        assert_eq!(compute_gradients(&a).magnitude, compute_gradients(&b).magnitude);
    }

    #[test]
    fn rotation_by_quarter_turn_shifts_orientation() {
        // Rotating (x, y) -> (h-1-y, x) maps the gradient (gx, gy) to (-gy, gx).
        let src = Image::from_fn_gray(12, 12, |x, y| {
            let v = (x as i32 - 5) * 2 + (y as i32 - 6) * 3;
            (128 + v * 6).clamp(0, 255) as u8
        });
        let rot = Image::from_fn_gray(12, 12, |x, y| src.gray_at(y, 11 - x));
        let gs = compute_gradients(&src);
        let gr = compute_gradients(&rot);
        for y in 2..10 {
            for x in 2..10 {
                let (rx, ry) = (11 - y, x);
                let want = fold_pi(gs.orientation[y * 12 + x] + PI / 2.0);
                let got = gr.orientation[ry * 12 + rx];
                let d = (want - got).abs();
                assert!(d.min(PI - d) < 1e-9, "({x},{y}) want {want} got {got}");
            }
        }
    }
}
