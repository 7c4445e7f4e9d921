/// Thin a magnitude map: a pixel survives only if it is `>=` both nearest-pixel
/// neighbours along its gradient direction. Out-of-frame neighbours count as 0.
pub fn nms_edges(width: usize, height: usize, magnitude: &[f64], orientation: &[f64]) -> Vec<f64> {
    assert_eq!(magnitude.len(), width * height);
    assert_eq!(orientation.len(), width * height);
    let get = |x: isize, y: isize| -> f64 {
        if x < 0 || y < 0 || x >= width as isize || y >= height as isize {
            0.0
        } else {
            magnitude[y as usize * width + x as usize]
        }
    };
    let mut out = vec![0.0; width * height];
    for y in 0..height {
        for x in 0..width {
            let i = y * width + x;
            let m = magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let (s, c) = orientation[i].sin_cos();
            let dx = c.round() as isize;
            let dy = s.round() as isize;
            let (xi, yi) = (x as isize, y as isize);
            if m >= get(xi + dx, yi + dy) && m >= get(xi - dx, yi - dy) {
                out[i] = m;
            }
        }
    }
    out
}
