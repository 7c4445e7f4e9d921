//! Structured-output tracker: pyramid histogram features, a budgeted
//! kernel SVM, and a decision rule that adds a motion smoothness prior.

mod feature;
mod larank;

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::{BoundingBox, Image};
use crate::objectness::sample_local;

pub use feature::{
    check_patch_size, extract_feature, intersection_kernel, PatchFeature, BINS, BLOCKS, DEFAULT_PATCH,
    FEATURE_LEN, LEVELS,
};
pub use larank::{Larank, SupportVector, SvmConfig};

/// `w_s * exp(-|c(b) - c(prev)|^2 / (2 sigma^2))`.
pub fn smoothness(b: &BoundingBox, prev: &BoundingBox, sigma: f64, weight: f64) -> f64 {
    let d = b.center_distance(prev);
    weight * (-(d * d) / (2.0 * sigma * sigma)).exp()
}

/// Index of the best candidate under `score + smoothness`; ties go to the
/// smoother box, then to the smaller / top-left one.
pub fn select_best(
    boxes: &[BoundingBox],
    scores: &[f64],
    prev: &BoundingBox,
    sigma: f64,
    weight: f64,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, (b, &f)) in boxes.iter().zip(scores).enumerate() {
        let s = smoothness(b, prev, sigma, weight);
        let total = f + s;
        let better = match best {
            None => true,
            Some((j, bt, bs)) => match total.total_cmp(&bt) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => match s.total_cmp(&bs) {
                    std::cmp::Ordering::Greater => true,
                    std::cmp::Ordering::Less => false,
                    std::cmp::Ordering::Equal => b.tie_order(&boxes[j]).is_lt(),
                },
            },
        };
        if better {
            best = Some((i, total, s));
        }
    }
    best.map(|(i, t, _)| (i, t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    pub svm: SvmConfig,
    pub patch_size: usize,
    pub smoothness_weight: f64,
    /// Sampling used when a frame has no candidates.
    pub fallback_radius: f64,
    pub fallback_count: usize,
    pub seed: u64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            svm: SvmConfig::default(),
            patch_size: DEFAULT_PATCH,
            smoothness_weight: 0.1,
            fallback_radius: 30.0,
            fallback_count: 80,
            seed: 0,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.svm.validate()?;
        check_patch_size(self.patch_size)?;
        if !(self.smoothness_weight >= 0.0 && self.smoothness_weight.is_finite()) {
            return Err(Error::config("smoothness_weight", "must be finite and >= 0"));
        }
        if self.fallback_count == 0 {
            return Err(Error::config("fallback_count", "must be >= 1"));
        }
        Ok(())
    }
}

/// Result of one test step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimate {
    pub bbox: BoundingBox,
    /// Model score plus smoothness of the chosen box.
    pub score: f64,
    /// True when the candidate list was empty and local samples were used.
    pub fallback: bool,
}

/// Boxes seen in `feature` lookups are cached until the next update.
fn key(b: &BoundingBox) -> [u64; 4] {
    [b.x.to_bits(), b.y.to_bits(), b.w.to_bits(), b.h.to_bits()]
}

pub struct SsTracker {
    cfg: TrackerConfig,
    svm: Larank,
    prev: BoundingBox,
    sigma: f64,
    frame: usize,
    rng: ChaCha8Rng,
    cache: HashMap<[u64; 4], PatchFeature>,
}

impl SsTracker {
    /// Start tracking `b1` on the first frame, training on `negatives`.
    pub fn init(frame: &Image, b1: BoundingBox, negatives: &[BoundingBox], cfg: TrackerConfig) -> Result<Self> {
        cfg.validate()?;
        if !(b1.w >= 4.0 && b1.h >= 4.0) {
            return Err(Error::InvalidBox(format!("initial box {b1} is smaller than 4x4")));
        }
        if b1.intersection_area(&frame.full_box()) <= 0.0 {
            return Err(Error::BoxOutsideImage(b1.to_string()));
        }
        let mut t = Self {
            svm: Larank::new(cfg.svm.clone(), cfg.seed),
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_f00d),
            sigma: b1.diagonal(),
            prev: b1,
            frame: 0,
            cfg,
            cache: HashMap::new(),
        };
        t.update(frame, &b1, negatives)?;
        Ok(t)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn previous(&self) -> BoundingBox {
        self.prev
    }

    pub fn frame_index(&self) -> usize {
        self.frame
    }

    pub fn solver(&self) -> &Larank {
        &self.svm
    }

    pub fn evaluate(&self, f: &PatchFeature) -> f64 {
        self.svm.evaluate(f)
    }

    fn features(&mut self, frame: &Image, boxes: &[BoundingBox]) -> Result<Vec<PatchFeature>> {
        let patch = self.cfg.patch_size;
        let cache = &self.cache;
        let feats: Vec<PatchFeature> = boxes
            .par_iter()
            .map(|b| match cache.get(&key(b)) {
                Some(f) => Ok(f.clone()),
                None => extract_feature(frame, b, patch),
            })
            .collect::<Result<_>>()?;
        for (b, f) in boxes.iter().zip(&feats) {
            self.cache.entry(key(b)).or_insert_with(|| f.clone());
        }
        Ok(feats)
    }

    /// Pick the next position among `candidates` (local samples when empty).
    pub fn track_step(&mut self, frame: &Image, candidates: &[BoundingBox]) -> Result<Estimate> {
        self.cache.clear();
        self.frame += 1;
        let fallback = candidates.is_empty();
        let owned;
        let boxes = if fallback {
            owned = sample_local(
                &self.prev,
                self.cfg.fallback_radius,
                self.cfg.fallback_count,
                frame.width(),
                frame.height(),
                &mut self.rng,
            );
            &owned[..]
        } else {
            candidates
        };
        let feats = self.features(frame, boxes)?;
        let scores: Vec<f64> = feats.par_iter().map(|f| self.svm.evaluate(f)).collect();
        let (i, score) = select_best(boxes, &scores, &self.prev, self.sigma, self.cfg.smoothness_weight)
            .expect("candidate list is never empty");
        self.prev = boxes[i];
        Ok(Estimate {
            bbox: boxes[i],
            score,
            fallback,
        })
    }

    /// Add the current frame as a training pattern with `estimate` as the
    /// label and `negatives` as competing outputs.
    pub fn update(&mut self, frame: &Image, estimate: &BoundingBox, negatives: &[BoundingBox]) -> Result<()> {
        let mut seen = std::collections::HashSet::new();
        seen.insert(key(estimate));
        let mut boxes = vec![*estimate];
        for b in negatives {
            if seen.insert(key(b)) {
                boxes.push(*b);
            }
        }
        let feats = self.features(frame, &boxes)?;
        self.svm.update(self.frame, boxes, feats);
        self.prev = *estimate;
        self.cache.clear();
        Ok(())
    }

    /// Versioned text checkpoint; features are rebuilt from frames on load.
    pub fn to_checkpoint(&self) -> String {
        let p = self.prev;
        let seed: String = self.rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        format!(
            "ebt-sstracker v1\nsigma {:?}\nprev {:?} {:?} {:?} {:?}\nframe {}\nsampler {seed} {}\n{}",
            self.sigma,
            p.x,
            p.y,
            p.w,
            p.h,
            self.frame,
            self.rng.get_word_pos(),
            self.svm.to_record()
        )
    }

    /// Restore from [`SsTracker::to_checkpoint`]; `frame_of(i)` must return
    /// frame `i` of the sequence.
    pub fn from_checkpoint<F>(text: &str, cfg: TrackerConfig, mut frame_of: F) -> Result<Self>
    where
        F: FnMut(usize) -> Result<Image>,
    {
        cfg.validate()?;
        let bad = |m: &str| Error::Record(m.to_string());
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("ebt-sstracker v1") {
            return Err(bad("missing or unknown checkpoint tag"));
        }
        let mut field = |name: &str| -> Result<Vec<String>> {
            let l = lines.next().ok_or_else(|| bad("truncated checkpoint"))?;
            let mut t = l.split_whitespace();
            if t.next() != Some(name) {
                return Err(bad(&format!("expected {name}")));
            }
            Ok(t.map(String::from).collect())
        };
        let parse = |v: &str| v.parse::<f64>().map_err(|_| bad("bad number"));
        let sigma = parse(&field("sigma")?[0])?;
        let pv = field("prev")?;
        if pv.len() != 4 {
            return Err(bad("prev needs four numbers"));
        }
        let prev = BoundingBox::new(parse(&pv[0])?, parse(&pv[1])?, parse(&pv[2])?, parse(&pv[3])?);
        let frame = field("frame")?[0].parse::<usize>().map_err(|_| bad("bad frame"))?;
        let sm = field("sampler")?;
        if sm.len() != 2 || sm[0].len() != 64 {
            return Err(bad("bad sampler state"));
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&sm[0][2 * i..2 * i + 2], 16).map_err(|_| bad("bad sampler seed"))?;
        }
        let pos: u128 = sm[1].parse().map_err(|_| bad("bad sampler position"))?;
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_word_pos(pos);
        let rest: Vec<&str> = lines.collect();
        let patch = cfg.patch_size;
        let mut frames: HashMap<usize, Image> = HashMap::new();
        let svm = Larank::from_record(cfg.svm.clone(), &rest.join("\n"), |id, b| {
            if !frames.contains_key(&id) {
                frames.insert(id, frame_of(id)?);
            }
            extract_feature(&frames[&id], b, patch)
        })?;
        Ok(Self {
            cfg,
            svm,
            prev,
            sigma,
            frame,
            rng,
            cache: HashMap::new(),
        })
    }
}

#[cfg(test)]
mod tests;
