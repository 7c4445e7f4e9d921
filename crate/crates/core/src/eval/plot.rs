use super::metrics::{success_threshold, MetricCurves};

const W: f64 = 360.0;
const H: f64 = 260.0;
const PAD: f64 = 40.0;

fn panel(title: &str, x0: f64, points: &[(f64, f64)], x_max: f64, x_label: &str) -> String {
    let pw = W - 2.0 * PAD;
    let ph = H - 2.0 * PAD;
    let px = |x: f64| x0 + PAD + x / x_max * pw;
    let py = |y: f64| PAD + (1.0 - y) * ph;
    let poly: Vec<String> = points
        .iter()
        .map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y)))
        .collect();
    let mut s = format!(
        "<g><rect x=\"{:.1}\" y=\"{PAD}\" width=\"{pw}\" height=\"{ph}\" fill=\"none\" stroke=\"#444\"/>\n",
        x0 + PAD
    );
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"14\">{title}</text>\n",
        x0 + W / 2.0,
        PAD - 12.0
    ));
    s.push_str(&format!(
        "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"11\">{x_label}</text>\n",
        x0 + W / 2.0,
        H - 8.0
    ));
    for t in [0.0, 0.5, 1.0] {
        s.push_str(&format!(
            "<text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\" font-size=\"10\">{t}</text>\n",
            x0 + PAD - 4.0,
            py(t) + 3.0
        ));
    }
    s.push_str(&format!(
        "<polyline fill=\"none\" stroke=\"#c03\" stroke-width=\"2\" points=\"{}\"/></g>\n",
        poly.join(" ")
    ));
    s
}

/// Precision and success plots side by side.
pub fn curves_svg(m: &MetricCurves, label: &str) -> String {
    let prec: Vec<(f64, f64)> = m.precision.iter().enumerate().map(|(t, &v)| (t as f64, v)).collect();
    let succ: Vec<(f64, f64)> = m
        .success
        .iter()
        .enumerate()
        .map(|(i, &v)| (success_threshold(i), v))
        .collect();
    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{H}\" font-family=\"sans-serif\">\n",
        2.0 * W
    );
    s.push_str(&panel(
        &format!("Precision {label} [{:.3}]", m.ps20),
        0.0,
        &prec,
        50.0,
        "location error threshold (px)",
    ));
    s.push_str(&panel(
        &format!("Success {label} [{:.3}]", m.auc),
        W,
        &succ,
        1.0,
        "overlap threshold",
    ));
    s.push_str("</svg>\n");
    s
}
