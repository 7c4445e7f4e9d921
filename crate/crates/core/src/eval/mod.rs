//! One-pass evaluation: metrics, runner, frame-rate resampling, plots and
//! synthetic sequences.

mod metrics;
mod plot;
mod synth;

use std::time::Instant;

use crate::error::{Error, Result};
use crate::imgio::{BoundingBox, Image};

pub use metrics::{
    center_error, compute_curves, iou, success_threshold, MetricCurves, PRECISION_MAX, SUCCESS_STEPS,
};
pub use plot::curves_svg;
pub use synth::{synth_sequence, teleport_suite, teleport_x150, wander_suite, MotionStep, SynthSpec, SPEC_VERSION};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FrameOutput {
    pub bbox: BoundingBox,
    pub score: f64,
}

/// A tracker driven one frame at a time.
pub trait OnlineTracker {
    fn start(&mut self, frame: &Image, init: BoundingBox) -> Result<()>;
    fn step(&mut self, frame: &Image) -> Result<FrameOutput>;
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpeResult {
    pub trajectory: Vec<FrameOutput>,
    pub curves: MetricCurves,
    pub seconds: f64,
}

impl OpeResult {
    pub fn boxes(&self) -> Vec<BoundingBox> {
        self.trajectory.iter().map(|f| f.bbox).collect()
    }

    pub fn fps(&self) -> f64 {
        if self.seconds > 0.0 {
            self.trajectory.len() as f64 / self.seconds
        } else {
            f64::INFINITY
        }
    }
}

/// Initialise on the first ground-truth box and track every later frame
/// once, without re-initialisation.
pub fn run_ope<T: OnlineTracker>(tracker: &mut T, frames: &[Image], gt: &[Option<BoundingBox>]) -> Result<OpeResult> {
    if frames.len() != gt.len() {
        return Err(Error::LengthMismatch {
            what: "frames vs ground truth".into(),
            left: frames.len(),
            right: gt.len(),
        });
    }
    let Some(Some(b1)) = gt.first().copied() else {
        return Err(Error::GroundTruth {
            line: 1,
            reason: "first frame has no ground-truth box to initialise from".into(),
        });
    };
    let t0 = Instant::now();
    tracker.start(&frames[0], b1).map_err(|e| e.at_frame(0, "init"))?;
    let mut trajectory = vec![FrameOutput { bbox: b1, score: 0.0 }];
    for (i, f) in frames.iter().enumerate().skip(1) {
        trajectory.push(tracker.step(f).map_err(|e| e.at_frame(i, "track"))?);
    }
    let seconds = t0.elapsed().as_secs_f64();
    let boxes: Vec<BoundingBox> = trajectory.iter().map(|f| f.bbox).collect();
    let curves = compute_curves(&boxes, gt)?;
    Ok(OpeResult {
        trajectory,
        curves,
        seconds,
    })
}

/// Keep frames `0, stride, 2 * stride, ...` with their ground truth.
pub fn resample_lowfps<T: Clone>(frames: &[T], gt: &[Option<BoundingBox>], stride: usize) -> (Vec<T>, Vec<Option<BoundingBox>>) {
    let stride = stride.max(1);
    (
        frames.iter().step_by(stride).cloned().collect(),
        gt.iter().step_by(stride).copied().collect(),
    )
}

pub const TRAJECTORY_HEADER: &str = "frame,x,y,w,h,score";

/// Trajectory CSV with 0-based pixel coordinates.
pub fn trajectory_csv(traj: &[FrameOutput]) -> String {
    let mut s = format!("{TRAJECTORY_HEADER}\n");
    for (i, f) in traj.iter().enumerate() {
        let b = f.bbox;
        s.push_str(&format!("{i},{},{},{},{},{}\n", b.x, b.y, b.w, b.h, f.score));
    }
    s
}

/// Parse [`trajectory_csv`] output.
pub fn parse_trajectory(text: &str) -> Result<Vec<FrameOutput>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == TRAJECTORY_HEADER => {}
        _ => {
            return Err(Error::GroundTruth {
                line: 1,
                reason: format!("expected header {TRAJECTORY_HEADER}"),
            })
        }
    }
    lines
        .map(|(n, l)| {
            let v: Vec<f64> = l
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::GroundTruth {
                    line: n + 1,
                    reason: "unparsable number".into(),
                })?;
            if v.len() != 6 {
                return Err(Error::GroundTruth {
                    line: n + 1,
                    reason: format!("expected 6 fields, got {}", v.len()),
                });
            }
            Ok(FrameOutput {
                bbox: BoundingBox::new(v[1], v[2], v[3], v[4]),
                score: v[5],
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Replays a fixed list of boxes.
    struct Replay(Vec<BoundingBox>, usize);

    impl OnlineTracker for Replay {
        fn start(&mut self, _: &Image, _: BoundingBox) -> Result<()> {
            self.1 = 1;
            Ok(())
        }

        fn step(&mut self, _: &Image) -> Result<FrameOutput> {
            let b = *self.0.get(self.1).ok_or(Error::Record("replay exhausted".into()))?;
            self.1 += 1;
            Ok(FrameOutput { bbox: b, score: 1.0 })
        }
    }

    #[test]
    fn single_frame_sequence_is_perfect() {
        let b = BoundingBox::new(1.0, 2.0, 10.0, 10.0);
        let r = run_ope(&mut Replay(vec![], 0), &[Image::new_gray(20, 20, 0)], &[Some(b)]).unwrap();
        assert_eq!(r.boxes(), vec![b]);
        assert_eq!((r.curves.auc, r.curves.ps20), (1.0, 1.0));
    }

    #[test]
    fn errors_carry_the_frame_index() {
        let b = BoundingBox::new(1.0, 2.0, 10.0, 10.0);
        let frames = vec![Image::new_gray(20, 20, 0); 3];
        let err = run_ope(&mut Replay(vec![b, b], 0), &frames, &[Some(b); 3]).unwrap_err();
        assert!(matches!(err, Error::Frame { frame: 2, .. }), "{err}");
        assert!(run_ope(&mut Replay(vec![], 0), &frames, &[None, Some(b), Some(b)]).is_err());
    }

    #[test]
    fn lowfps_resampling() {
        let idx: Vec<usize> = (0..100).collect();
        let gt: Vec<Option<BoundingBox>> = (0..100).map(|i| Some(BoundingBox::new(i as f64, 0.0, 5.0, 5.0))).collect();
        let (f, g) = resample_lowfps(&idx, &gt, 20);
        assert_eq!(f, vec![0, 20, 40, 60, 80]);
        assert_eq!(g[3], gt[60]);
        let (f1, g1) = resample_lowfps(&idx, &gt, 1);
        assert_eq!((f1, g1), (idx, gt));
    }

    #[test]
    fn trajectory_csv_round_trip() {
        let t = vec![
            FrameOutput { bbox: BoundingBox::new(1.5, 2.0, 10.0, 12.0), score: 0.25 },
            FrameOutput { bbox: BoundingBox::new(3.0, 4.0, 11.0, 9.0), score: -1.0 },
        ];
        assert_eq!(parse_trajectory(&trajectory_csv(&t)).unwrap(), t);
        assert!(parse_trajectory("1,2,3,4\n").is_err());
    }
}
