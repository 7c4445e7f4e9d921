//! Seeded synthetic sequences: a textured, dark-framed rectangle moving
//! over low-contrast clutter with open edge fragments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::{BoundingBox, GroundTruth, Image};

pub const SPEC_VERSION: u32 = 1;

/// One instruction of a motion program; each consumes frame transitions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum MotionStep {
    Hold { frames: usize },
    Drift { dx: f64, dy: f64, frames: usize },
    /// A single-transition jump.
    Teleport { dx: f64, dy: f64 },
    /// Random smooth motion, at most `max_step` px per frame, bouncing off
    /// the frame borders.
    Wander { max_step: f64, frames: usize },
}

fn default_version() -> u32 {
    SPEC_VERSION
}

fn default_noise() -> u8 {
    12
}

fn default_distractors() -> usize {
    14
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub name: String,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Object width and height.
    pub object: [usize; 2],
    /// Initial object centre; the frame centre when absent.
    #[serde(default)]
    pub start: Option<[f64; 2]>,
    #[serde(default)]
    pub seed: u64,
    /// Amplitude of the static background texture.
    #[serde(default = "default_noise")]
    pub background_noise: u8,
    #[serde(default = "default_distractors")]
    pub distractors: usize,
    #[serde(default)]
    pub motion: Vec<MotionStep>,
}

fn synth_err(field: &str, reason: impl Into<String>) -> Error {
    Error::Synth {
        field: field.to_string(),
        reason: reason.into(),
    }
}

impl SynthSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: SynthSpec = serde_json::from_str(text).map_err(|e| synth_err("spec", e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SPEC_VERSION {
            return Err(synth_err("version", format!("unsupported version {}", self.version)));
        }
        if self.width < 16 || self.height < 16 {
            return Err(synth_err("width", "frame must be at least 16x16"));
        }
        if self.frames == 0 {
            return Err(synth_err("frames", "must be >= 1"));
        }
        let [ow, oh] = self.object;
        if ow < 8 || oh < 8 {
            return Err(synth_err("object", "object must be at least 8x8"));
        }
        if ow > self.width || oh > self.height {
            return Err(synth_err("object", format!("{ow}x{oh} does not fit a {}x{} frame", self.width, self.height)));
        }
        for m in &self.motion {
            if let MotionStep::Wander { max_step, .. } = m {
                if !(*max_step >= 0.0 && max_step.is_finite()) {
                    return Err(synth_err("motion", "wander step must be finite and >= 0"));
                }
            }
        }
        Ok(())
    }

    /// Object centre at every frame.
    fn centres(&self) -> Result<Vec<(f64, f64)>> {
        let [ow, oh] = self.object;
        let (ow, oh) = (ow as f64, oh as f64);
        let (w, h) = (self.width as f64, self.height as f64);
        let start = self.start.unwrap_or([w / 2.0, h / 2.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x00_6d6f_7469_6f6e);
        let mut c = (start[0], start[1]);
        let mut out = vec![c];
        let mut vel = (0.0f64, 0.0f64);
        let mut steps = self.motion.iter();
        let mut current: Option<(MotionStep, usize)> = None;
        while out.len() < self.frames {
            if current.as_ref().map_or(true, |(_, left)| *left == 0) {
                current = steps.next().map(|m| {
                    let n = match m {
                        MotionStep::Hold { frames }
                        | MotionStep::Drift { frames, .. }
                        | MotionStep::Wander { frames, .. } => *frames,
                        MotionStep::Teleport { .. } => 1,
                    };
                    (m.clone(), n)
                });
                if let Some((_, 0)) = current {
                    continue;
                }
            }
            match current.as_mut() {
                None => {}
                Some((step, left)) => {
                    *left -= 1;
                    match step {
                        MotionStep::Hold { .. } => {}
                        MotionStep::Drift { dx, dy, .. } | MotionStep::Teleport { dx, dy } => {
                            c.0 += *dx;
                            c.1 += *dy;
                        }
                        MotionStep::Wander { max_step, .. } => {
                            let m = *max_step;
                            vel.0 += rng.gen_range(-0.5..=0.5) * m;
                            vel.1 += rng.gen_range(-0.5..=0.5) * m;
                            let n = vel.0.hypot(vel.1);
                            if n > m {
                                vel = (vel.0 * m / n, vel.1 * m / n);
                            }
                            let (lo_x, hi_x) = (ow / 2.0, w - ow / 2.0);
                            let (lo_y, hi_y) = (oh / 2.0, h - oh / 2.0);
                            if c.0 + vel.0 < lo_x || c.0 + vel.0 > hi_x {
                                vel.0 = -vel.0;
                            }
                            if c.1 + vel.1 < lo_y || c.1 + vel.1 > hi_y {
                                vel.1 = -vel.1;
                            }
                            c.0 = (c.0 + vel.0).clamp(lo_x, hi_x);
                            c.1 = (c.1 + vel.1).clamp(lo_y, hi_y);
                        }
                    }
                }
            }
            out.push(c);
        }
        for (i, &(cx, cy)) in out.iter().enumerate() {
            let b = BoundingBox::from_center(cx, cy, ow, oh);
            if b.right() <= 0.0 || b.bottom() <= 0.0 || b.x >= w || b.y >= h {
                return Err(synth_err("motion", format!("object leaves the frame entirely at frame {i}")));
            }
        }
        Ok(out)
    }
}

/// Render the frames and exact ground truth described by `spec`.
pub fn synth_sequence(spec: &SynthSpec) -> Result<(Vec<Image>, GroundTruth)> {
    spec.validate()?;
    let centres = spec.centres()?;
    let (w, h) = (spec.width, spec.height);
    let [ow, oh] = spec.object;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let amp = spec.background_noise as i32;
    let mut background: Vec<[u8; 3]> = (0..w * h)
        .map(|_| {
            let n = if amp > 0 { rng.gen_range(-amp..=amp) } else { 0 };
            [
                (96 + n).clamp(0, 255) as u8,
                (108 + n).clamp(0, 255) as u8,
                (122 + n).clamp(0, 255) as u8,
            ]
        })
        .collect();
    for _ in 0..spec.distractors {
        let len = rng.gen_range(8.0..26.0f64);
        let ang = rng.gen_range(0.0..std::f64::consts::PI);
        let (x0, y0) = (rng.gen_range(0.0..w as f64), rng.gen_range(0.0..h as f64));
        let shade: [u8; 3] = if rng.gen_bool(0.5) { [40, 46, 58] } else { [170, 176, 186] };
        let steps = (len * 2.0) as usize;
        for s in 0..=steps {
            let t = s as f64 / 2.0;
            for off in [0.0, 1.0] {
                let x = x0 + t * ang.cos() - off * ang.sin();
                let y = y0 + t * ang.sin() + off * ang.cos();
                if x >= 0.0 && y >= 0.0 && (x as usize) < w && (y as usize) < h {
                    background[y as usize * w + x as usize] = shade;
                }
            }
        }
    }

    let border = 2;
    let block = 4;
    let bw = ow.div_ceil(block);
    let bh = oh.div_ceil(block);
    let blocks: Vec<[u8; 3]> = (0..bw * bh)
        .map(|_| {
            [
                rng.gen_range(160..=235),
                rng.gen_range(60..=150),
                rng.gen_range(20..=80),
            ]
        })
        .collect();
    let texture = |x: usize, y: usize| -> [u8; 3] {
        if x < border || y < border || x + border >= ow || y + border >= oh {
            [18, 18, 22]
        } else {
            blocks[(y / block) * bw + x / block]
        }
    };

    let mut frames = Vec::with_capacity(spec.frames);
    let mut gt = Vec::with_capacity(spec.frames);
    for (fi, &(cx, cy)) in centres.iter().enumerate() {
        let ox = (cx - ow as f64 / 2.0).round() as i64;
        let oy = (cy - oh as f64 / 2.0).round() as i64;
        let mut frng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(0x9E37_79B9 * (fi as u64 + 1)));
        let mut data = Vec::with_capacity(w * h * 3);
        for y in 0..h {
            for x in 0..w {
                let (lx, ly) = (x as i64 - ox, y as i64 - oy);
                let base = if lx >= 0 && ly >= 0 && (lx as usize) < ow && (ly as usize) < oh {
                    texture(lx as usize, ly as usize)
                } else {
                    background[y * w + x]
                };
                let n: i32 = frng.gen_range(-3..=3);
                data.extend(base.iter().map(|&v| (v as i32 + n).clamp(0, 255) as u8));
            }
        }
        frames.push(Image::from_raw(w, h, 3, data));
        gt.push(Some(BoundingBox::new(ox as f64, oy as f64, ow as f64, oh as f64)));
    }
    Ok((frames, gt))
}

/// The stock spec shipped with the command line tool: a 60-frame sequence
/// whose object jumps 150 px to the right at frame 30.
pub fn teleport_x150() -> SynthSpec {
    SynthSpec {
        version: SPEC_VERSION,
        name: "teleport-x150".into(),
        width: 320,
        height: 240,
        frames: 60,
        object: [40, 36],
        start: Some([70.0, 120.0]),
        seed: 150,
        background_noise: 12,
        distractors: 14,
        motion: vec![
            MotionStep::Drift { dx: 1.0, dy: 0.5, frames: 29 },
            MotionStep::Teleport { dx: 150.0, dy: 0.0 },
            MotionStep::Drift { dx: -1.0, dy: -0.5, frames: 30 },
        ],
    }
}

/// `count` 320x240, 100-frame sequences, each with one jump of at least
/// `min_jump` px between slow drifts.
pub fn teleport_suite(count: usize, seed: u64, min_jump: f64) -> Vec<SynthSpec> {
    let (w, h, frames) = (320.0, 240.0, 100usize);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let ow = rng.gen_range(32..=48usize);
        let oh = rng.gen_range(32..=48usize);
        let (mx, my) = (ow as f64 / 2.0 + 8.0, oh as f64 / 2.0 + 8.0);
        let fits = |x: f64, y: f64| x >= mx && x <= w - mx && y >= my && y <= h - my;
        let jump_at = rng.gen_range(30..=70usize);
        let v1 = (rng.gen_range(-1.0..=1.0f64), rng.gen_range(-1.0..=1.0f64));
        let v2 = (rng.gen_range(-1.0..=1.0f64), rng.gen_range(-1.0..=1.0f64));
        let left = rng.gen_bool(0.5);
        let pre = (
            if left { rng.gen_range(mx..=w / 2.0 - 40.0) } else { rng.gen_range(w / 2.0 + 40.0..=w - mx) },
            rng.gen_range(my..=h - my),
        );
        let (lo, hi) = if left { (pre.0 + min_jump, w - mx) } else { (mx, pre.0 - min_jump) };
        if lo > hi {
            continue;
        }
        let post = (rng.gen_range(lo..=hi), rng.gen_range(my..=h - my));
        let n1 = (jump_at - 1) as f64;
        let n2 = (frames - 1 - jump_at) as f64;
        let start = (pre.0 - n1 * v1.0, pre.1 - n1 * v1.1);
        let end = (post.0 + n2 * v2.0, post.1 + n2 * v2.1);
        let jump = (post.0 - pre.0, post.1 - pre.1);
        if !(fits(start.0, start.1) && fits(pre.0, pre.1) && fits(post.0, post.1) && fits(end.0, end.1))
            || jump.0.hypot(jump.1) < min_jump
        {
            continue;
        }
        let i = out.len();
        out.push(SynthSpec {
            version: SPEC_VERSION,
            name: format!("teleport-{i:02}"),
            width: w as usize,
            height: h as usize,
            frames,
            object: [ow, oh],
            start: Some([start.0, start.1]),
            seed: seed.wrapping_mul(1000).wrapping_add(i as u64),
            background_noise: default_noise(),
            distractors: default_distractors(),
            motion: vec![
                MotionStep::Drift { dx: v1.0, dy: v1.1, frames: jump_at - 1 },
                MotionStep::Teleport { dx: jump.0, dy: jump.1 },
                MotionStep::Drift { dx: v2.0, dy: v2.1, frames: frames - 1 - jump_at },
            ],
        });
    }
    out
}

/// `count` 320x240, 100-frame sequences of smooth random motion whose
/// per-frame step never exceeds `max_step` px.
pub fn wander_suite(count: usize, seed: u64, max_step: f64) -> Vec<SynthSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| {
            let ow = rng.gen_range(32..=48usize);
            let oh = rng.gen_range(32..=48usize);
            let start = [
                rng.gen_range(ow as f64..=320.0 - ow as f64),
                rng.gen_range(oh as f64..=240.0 - oh as f64),
            ];
            SynthSpec {
                version: SPEC_VERSION,
                name: format!("wander-{i:02}"),
                width: 320,
                height: 240,
                frames: 100,
                object: [ow, oh],
                start: Some(start),
                seed: seed.wrapping_mul(1000).wrapping_add(i as u64),
                background_noise: default_noise(),
                distractors: default_distractors(),
                motion: vec![MotionStep::Wander {
                    max_step: rng.gen_range(max_step / 3.0..=max_step),
                    frames: 99,
                }],
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(motion: Vec<MotionStep>) -> SynthSpec {
        SynthSpec {
            version: 1,
            name: "t".into(),
            width: 200,
            height: 120,
            frames: 20,
            object: [30, 24],
            start: None,
            seed: 5,
            background_noise: 10,
            distractors: 5,
            motion,
        }
    }

    #[test]
    fn zero_motion_keeps_gt_constant() {
        let (frames, gt) = synth_sequence(&spec(vec![])).unwrap();
        assert_eq!(frames.len(), 20);
        assert!(gt.windows(2).all(|w| w[0] == w[1]));
        assert_eq!(gt[0], Some(BoundingBox::new(85.0, 48.0, 30.0, 24.0)));
    }

    #[test]
    fn teleport_jumps_between_frames_9_and_10() {
        let s = SynthSpec {
            width: 320,
            start: Some([60.0, 60.0]),
            ..spec(vec![MotionStep::Hold { frames: 9 }, MotionStep::Teleport { dx: 150.0, dy: 0.0 }])
        };
        let (_, gt) = synth_sequence(&s).unwrap();
        let c = |i: usize| gt[i].unwrap().center();
        assert_eq!(c(9).0 - c(8).0, 0.0);
        assert_eq!(c(10).0 - c(9).0, 150.0);
        assert_eq!(c(10).1, c(9).1);
    }

    #[test]
    fn deterministic_and_seed_sensitive() {
        let a = synth_sequence(&spec(vec![MotionStep::Wander { max_step: 6.0, frames: 19 }])).unwrap();
        let b = synth_sequence(&spec(vec![MotionStep::Wander { max_step: 6.0, frames: 19 }])).unwrap();
        assert_eq!(a, b);
        let c = synth_sequence(&SynthSpec {
            seed: 6,
            ..spec(vec![])
        })
        .unwrap();
        assert_ne!(a.0[0], c.0[0]);
    }

    #[test]
    fn wander_respects_step_and_frame() {
        let s = SynthSpec {
            frames: 200,
            ..spec(vec![MotionStep::Wander { max_step: 15.0, frames: 199 }])
        };
        let (_, gt) = synth_sequence(&s).unwrap();
        for w in gt.windows(2) {
            let (a, b) = (w[0].unwrap(), w[1].unwrap());
            assert!(a.center_distance(&b) <= 15.0 + 1.5);
            assert!(b.x >= 0.0 && b.right() <= 200.0 && b.y >= 0.0 && b.bottom() <= 120.0);
        }
    }

    #[test]
    fn invalid_specs_name_the_field() {
        let big = SynthSpec {
            object: [300, 20],
            ..spec(vec![])
        };
        assert!(matches!(synth_sequence(&big), Err(Error::Synth { field, .. }) if field == "object"));
        let gone = spec(vec![MotionStep::Teleport { dx: 500.0, dy: 0.0 }]);
        assert!(matches!(synth_sequence(&gone), Err(Error::Synth { field, .. }) if field == "motion"));
        assert!(SynthSpec::from_json("{\"width\": 10}").is_err());
    }

    #[test]
    fn suites_hold_their_motion_bounds() {
        for spec in teleport_suite(6, 7, 120.0) {
            let (frames, gt) = synth_sequence(&spec).unwrap();
            assert_eq!(frames.len(), 100);
            let jumps: Vec<f64> = gt
                .windows(2)
                .map(|p| {
                    let (a, b) = (p[0].unwrap(), p[1].unwrap());
                    (a.center().0 - b.center().0).hypot(a.center().1 - b.center().1)
                })
                .collect();
            assert_eq!(jumps.iter().filter(|&&d| d >= 119.0).count(), 1, "{}", spec.name);
            assert_eq!(jumps.iter().filter(|&&d| d > 3.0).count(), 1);
            for b in gt.iter().flatten() {
                assert!(b.x >= 0.0 && b.y >= 0.0 && b.right() <= 320.0 && b.bottom() <= 240.0);
            }
        }
        for spec in wander_suite(4, 7, 15.0) {
            let (_, gt) = synth_sequence(&spec).unwrap();
            for p in gt.windows(2) {
                let (a, b) = (p[0].unwrap(), p[1].unwrap());
                assert!((a.center().0 - b.center().0).hypot(a.center().1 - b.center().1) <= 15.0 + 1.5);
            }
        }
        assert_eq!(teleport_suite(3, 1, 120.0), teleport_suite(3, 1, 120.0));
    }

    #[test]
    fn json_round_trip_of_stock_spec() {
        let s = teleport_x150();
        assert_eq!(SynthSpec::from_json(&s.to_json()).unwrap(), s);
        let (_, gt) = synth_sequence(&s).unwrap();
        let d = gt[30].unwrap().center().0 - gt[29].unwrap().center().0;
        assert_eq!(d, 150.0);
    }
}
