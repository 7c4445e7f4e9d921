//! Fixed-template tracker scored by normalised cross-correlation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imgio::{resample_indices, BoundingBox, Image};
use crate::objectness::sample_local;
use crate::sstracker::{select_best, Estimate};

/// Gray canonical patch of `b`.
pub fn gray_patch(img: &Image, b: &BoundingBox, size: usize) -> Result<Vec<f64>> {
    let (xs, ys) = resample_indices(img, b, size, size)?;
    Ok(ys
        .iter()
        .flat_map(|&y| xs.iter().map(move |&x| img.gray_at(x, y) as f64))
        .collect())
}

fn mean_std(p: &[f64]) -> (f64, f64) {
    let n = p.len() as f64;
    let mean = p.iter().sum::<f64>() / n;
    let var = p.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct NccTemplate {
    pixels: Vec<f64>,
    mean: f64,
    std: f64,
}

impl NccTemplate {
    pub fn new(pixels: Vec<f64>) -> Self {
        let (mean, std) = mean_std(&pixels);
        Self { pixels, mean, std }
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }
}

/// Correlation coefficient of `patch` with the template, in `[-1, 1]`;
/// 0 when either side has no variance.
pub fn ncc(patch: &[f64], t: &NccTemplate) -> f64 {
    assert_eq!(patch.len(), t.pixels.len(), "patch and template sizes differ");
    let (mp, sp) = mean_std(patch);
    if sp <= 1e-12 || t.std <= 1e-12 {
        return 0.0;
    }
    let cov: f64 = patch
        .iter()
        .zip(&t.pixels)
        .map(|(p, q)| (p - mp) * (q - t.mean))
        .sum();
    (cov / (patch.len() as f64 * sp * t.std)).clamp(-1.0, 1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NccConfig {
    pub patch_size: usize,
    pub smoothness_weight: f64,
    pub fallback_radius: f64,
    pub fallback_count: usize,
    pub seed: u64,
}

impl Default for NccConfig {
    fn default() -> Self {
        Self {
            patch_size: 60,
            smoothness_weight: 0.1,
            fallback_radius: 30.0,
            fallback_count: 80,
            seed: 0,
        }
    }
}

pub struct NccTracker {
    cfg: NccConfig,
    template: NccTemplate,
    prev: BoundingBox,
    sigma: f64,
    rng: ChaCha8Rng,
}

impl NccTracker {
    pub fn init(frame: &Image, b1: BoundingBox, cfg: NccConfig) -> Result<Self> {
        if cfg.patch_size < 2 {
            return Err(Error::config("patch_size", "must be >= 2"));
        }
        if !(b1.w >= 4.0 && b1.h >= 4.0) {
            return Err(Error::InvalidBox(format!("initial box {b1} is smaller than 4x4")));
        }
        let template = NccTemplate::new(gray_patch(frame, &b1, cfg.patch_size)?);
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_f00d),
            cfg,
            template,
            sigma: b1.diagonal(),
            prev: b1,
        })
    }

    pub fn template(&self) -> &NccTemplate {
        &self.template
    }

    pub fn previous(&self) -> BoundingBox {
        self.prev
    }

    pub fn score(&self, frame: &Image, b: &BoundingBox) -> Result<f64> {
        Ok(ncc(&gray_patch(frame, b, self.cfg.patch_size)?, &self.template))
    }

    pub fn track_step(&mut self, frame: &Image, candidates: &[BoundingBox]) -> Result<Estimate> {
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
        let scores: Vec<f64> = boxes
            .par_iter()
            .map(|b| self.score(frame, b))
            .collect::<Result<_>>()?;
        let (i, score) = select_best(boxes, &scores, &self.prev, self.sigma, self.cfg.smoothness_weight)
            .expect("candidate list is never empty");
        self.prev = boxes[i];
        Ok(Estimate {
            bbox: boxes[i],
            score,
            fallback,
        })
    }
}
