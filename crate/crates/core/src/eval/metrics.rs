use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::BoundingBox;

pub const SUCCESS_STEPS: usize = 20;
pub const PRECISION_MAX: usize = 50;

pub fn iou(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.iou(b)
}

pub fn center_error(a: &BoundingBox, b: &BoundingBox) -> f64 {
    a.center_distance(b)
}

/// Overlap threshold `i` of the success curve.
pub fn success_threshold(i: usize) -> f64 {
    i as f64 / SUCCESS_STEPS as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricCurves {
    /// Fraction of frames with centre error `<= t`, `t = 0..=50` px.
    pub precision: Vec<f64>,
    /// Fraction of frames with IoU `>= i / 20`, `i = 0..=20`.
    pub success: Vec<f64>,
    pub auc: f64,
    pub ps20: f64,
    /// Frames with ground truth present.
    pub frames: usize,
}

/// Precision and success curves of `traj` against `gt`; frames without
/// ground truth are left out entirely.
pub fn compute_curves(traj: &[BoundingBox], gt: &[Option<BoundingBox>]) -> Result<MetricCurves> {
    if traj.len() != gt.len() {
        return Err(Error::LengthMismatch {
            what: "trajectory vs ground truth".into(),
            left: traj.len(),
            right: gt.len(),
        });
    }
    let mut ious = Vec::with_capacity(traj.len());
    let mut errs = Vec::with_capacity(traj.len());
    for (t, g) in traj.iter().zip(gt) {
        if let Some(g) = g {
            ious.push(iou(t, g));
            errs.push(center_error(t, g));
        }
    }
    let n = ious.len();
    let rate = |count: usize| if n == 0 { 0.0 } else { count as f64 / n as f64 };

    ious.sort_by(f64::total_cmp);
    errs.sort_by(f64::total_cmp);
    let success: Vec<f64> = (0..=SUCCESS_STEPS)
        .map(|i| {
            let t = success_threshold(i);
            rate(n - ious.partition_point(|&v| v < t))
        })
        .collect();
    let precision: Vec<f64> = (0..=PRECISION_MAX)
        .map(|t| rate(errs.partition_point(|&e| e <= t as f64)))
        .collect();
    let auc = success.iter().sum::<f64>() / success.len() as f64;
    Ok(MetricCurves {
        ps20: precision[20],
        precision,
        success,
        auc,
        frames: n,
    })
}

impl MetricCurves {
    /// `curve,threshold,value` rows for both curves.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("curve,threshold,value\n");
        for (t, v) in self.precision.iter().enumerate() {
            s.push_str(&format!("precision,{t},{v}\n"));
        }
        for (i, v) in self.success.iter().enumerate() {
            s.push_str(&format!("success,{},{v}\n", success_threshold(i)));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn oracle(traj: &[BoundingBox], gt: &[Option<BoundingBox>]) -> (Vec<f64>, Vec<f64>, f64) {
        let frames: Vec<(BoundingBox, BoundingBox)> = traj
            .iter()
            .zip(gt)
            .filter_map(|(t, g)| g.map(|g| (*t, g)))
            .collect();
        let n = frames.len();
        let mut success = Vec::new();
        for i in 0..=20 {
            let t = i as f64 / 20.0;
            let mut c = 0;
            for (a, b) in &frames {
                if a.iou(b) >= t {
                    c += 1;
                }
            }
            success.push(if n == 0 { 0.0 } else { c as f64 / n as f64 });
        }
        let mut precision = Vec::new();
        for t in 0..=50 {
            let mut c = 0;
            for (a, b) in &frames {
                if a.center_distance(b) <= t as f64 {
                    c += 1;
                }
            }
            precision.push(if n == 0 { 0.0 } else { c as f64 / n as f64 });
        }
        let auc = success.iter().sum::<f64>() / 21.0;
        (precision, success, auc)
    }

    #[test]
    fn closed_forms() {
        let a = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        assert_eq!(iou(&a, &a), 1.0);
        assert_eq!(iou(&a, &BoundingBox::new(20.0, 0.0, 10.0, 10.0)), 0.0);
        assert_eq!(iou(&a, &BoundingBox::new(5.0, 0.0, 10.0, 10.0)), 50.0 / 150.0);
        let b = a.translate(3.0, 4.0);
        assert_eq!(center_error(&a, &b), 5.0);
        assert_eq!(center_error(&b, &a), 5.0);
    }

    #[test]
    fn hand_fixture_table() {
        let g = BoundingBox::new(0.0, 0.0, 10.0, 10.0);
        let traj: Vec<BoundingBox> = [10.0, 8.0, 6.0, 4.0, 2.0]
            .iter()
            .map(|&w| BoundingBox::new(0.0, 0.0, w, 10.0))
            .collect();
        let gt = vec![Some(g); 5];
        let m = compute_curves(&traj, &gt).unwrap();
        let want: [f64; 21] = [
            1.0, 1.0, 1.0, 1.0, 1.0, 0.8, 0.8, 0.8, 0.8, 0.6, 0.6, 0.6, 0.6, 0.4, 0.4, 0.4, 0.4, 0.2,
            0.2, 0.2, 0.2,
        ];
        assert_eq!(m.success, want);
        assert_eq!(m.success[10], 0.6);
        assert!((m.auc - 13.0 / 21.0).abs() < 1e-15);
        // centre errors 0, 1, 2, 3, 4
        assert_eq!(&m.precision[..5], &[0.2, 0.4, 0.6, 0.8, 1.0]);
        assert_eq!(m.ps20, 1.0);
    }

    #[test]
    fn perfect_and_absent_frames() {
        let g = BoundingBox::new(3.0, 4.0, 20.0, 10.0);
        let m = compute_curves(&[g, g], &[Some(g), Some(g)]).unwrap();
        assert!(m.success.iter().all(|&v| v == 1.0));
        assert_eq!((m.auc, m.ps20), (1.0, 1.0));
        let far = g.translate(500.0, 0.0);
        let m = compute_curves(&[g, far], &[Some(g), None]).unwrap();
        assert_eq!((m.auc, m.frames), (1.0, 1));
        let m = compute_curves(&[far], &[Some(g)]).unwrap();
        assert!(m.success[1..].iter().all(|&v| v == 0.0));
        assert_eq!(m.ps20, 0.0);
        assert!(compute_curves(&[g], &[]).is_err());
    }

    fn arb_box() -> impl Strategy<Value = BoundingBox> {
        (0.0f64..100.0, 0.0f64..100.0, 1.0f64..60.0, 1.0f64..60.0)
            .prop_map(|(x, y, w, h)| BoundingBox::new(x.round(), y.round(), w.round(), h.round()))
    }

    proptest! {
        #[test]
        fn matches_double_loop_oracle(pairs in prop::collection::vec((arb_box(), prop::option::weighted(0.9, arb_box())), 1..60)) {
            let traj: Vec<BoundingBox> = pairs.iter().map(|p| p.0).collect();
            let gt: Vec<Option<BoundingBox>> = pairs.iter().map(|p| p.1).collect();
            let m = compute_curves(&traj, &gt).unwrap();
            let (p, s, auc) = oracle(&traj, &gt);
            prop_assert_eq!(&m.precision, &p);
            prop_assert_eq!(&m.success, &s);
            prop_assert_eq!(m.auc, auc);
            prop_assert!(m.precision.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(m.success.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!((0.0..=1.0).contains(&m.auc));
        }
    }
}
