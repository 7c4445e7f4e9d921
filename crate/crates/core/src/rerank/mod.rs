//! Instance-specific re-ranking of proposals with an online linear SVM over
//! Haar-like objectness features.

mod feature;
mod pegasos;

use std::cmp::Ordering;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::edgemap::EdgeStructures;
use crate::error::{Error, Result};
use crate::imgio::BoundingBox;
use crate::objectness::{by_objectness, ScoredBox};

pub use feature::{partition_box, rerank_feature, rerank_features, RerankFeature, FEATURE_DIM};
pub use pegasos::EpochStat;

use pegasos::{augment, train, Augmented};

/// Which boxes supply the negatives at model updates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainingPool {
    /// Top boxes of the thresholded pool by objectness.
    Objectness,
    /// The re-ranked selection of the current frame.
    Reranked,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RerankConfig {
    pub lambda: f64,
    pub init_epochs: usize,
    pub update_epochs: usize,
    pub update_period: usize,
    /// Pool boxes below this IoU with the estimate are negatives.
    pub neg_overlap: f64,
    /// Number of pool boxes used for training.
    pub train_pool: usize,
    pub training_pool: TrainingPool,
    pub seed: u64,
}

impl Default for RerankConfig {
    fn default() -> Self {
        Self {
            lambda: 1e-3,
            init_epochs: 50,
            update_epochs: 5,
            update_period: 5,
            neg_overlap: 0.5,
            train_pool: 200,
            training_pool: TrainingPool::Objectness,
            seed: 0,
        }
    }
}

impl RerankConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be > 0"));
        }
        if self.update_period == 0 {
            return Err(Error::config("update_period", "must be >= 1"));
        }
        if !(0.0..=1.0).contains(&self.neg_overlap) {
            return Err(Error::config("neg_overlap", "must lie in [0,1]"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RerankModel {
    pub weights: [f64; FEATURE_DIM],
    pub bias: f64,
    /// Sub-gradient steps taken so far.
    pub step: u64,
    pub cfg: RerankConfig,
    /// Per-epoch objective and positive margin of the last training call.
    pub trace: Vec<EpochStat>,
}

const RECORD_TAG: &str = "ebt-rerank v1";

impl RerankModel {
    pub fn zero(cfg: RerankConfig) -> Self {
        Self {
            weights: [0.0; FEATURE_DIM],
            bias: 0.0,
            step: 0,
            cfg,
            trace: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bias == 0.0 && self.weights.iter().all(|&w| w == 0.0)
    }

    pub fn decision(&self, f: &RerankFeature) -> f64 {
        self.weights.iter().zip(f).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }

    fn augmented(&self) -> Augmented {
        let mut a = [0.0; FEATURE_DIM + 1];
        a[..FEATURE_DIM].copy_from_slice(&self.weights);
        a[FEATURE_DIM] = self.bias;
        a
    }

    fn fit(&mut self, positive: RerankFeature, negatives: &[RerankFeature], epochs: usize) {
        if negatives.is_empty() || epochs == 0 {
            return;
        }
        let mut xs = Vec::with_capacity(negatives.len() + 1);
        let mut ys = Vec::with_capacity(negatives.len() + 1);
        xs.push(augment(&positive));
        ys.push(1.0);
        for n in negatives {
            xs.push(augment(n));
            ys.push(-1.0);
        }
        let mut w = self.augmented();
        self.trace = train(&mut w, &mut self.step, &xs, &ys, self.cfg.lambda, epochs, self.cfg.seed, 0);
        self.weights.copy_from_slice(&w[..FEATURE_DIM]);
        self.bias = w[FEATURE_DIM];
    }

    /// Text record: tag line, then `weights`, `bias` and `step` lines.
    pub fn to_record(&self) -> String {
        let ws: Vec<String> = self.weights.iter().map(|w| format!("{w:?}")).collect();
        format!(
            "{RECORD_TAG}\nweights {}\nbias {:?}\nstep {}\n",
            ws.join(" "),
            self.bias,
            self.step
        )
    }

    pub fn from_record(text: &str, cfg: RerankConfig) -> Result<Self> {
        let bad = |m: &str| Error::Record(m.to_string());
        let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty());
        if lines.next() != Some(RECORD_TAG) {
            return Err(bad("missing or unknown version tag"));
        }
        let mut model = Self::zero(cfg);
        let (mut got_w, mut got_b, mut got_s) = (false, false, false);
        for line in lines {
            let (key, rest) = line.split_once(' ').ok_or_else(|| bad(line))?;
            match key {
                "weights" => {
                    let vals: Vec<f64> = rest
                        .split_whitespace()
                        .map(str::parse)
                        .collect::<std::result::Result<_, _>>()
                        .map_err(|_| bad("unparsable weight"))?;
                    if vals.len() != FEATURE_DIM {
                        return Err(bad("expected 10 weights"));
                    }
                    model.weights.copy_from_slice(&vals);
                    got_w = true;
                }
                "bias" => {
                    model.bias = rest.trim().parse().map_err(|_| bad("unparsable bias"))?;
                    got_b = true;
                }
                "step" => {
                    model.step = rest.trim().parse().map_err(|_| bad("unparsable step"))?;
                    got_s = true;
                }
                _ => return Err(bad(&format!("unknown key {key}"))),
            }
        }
        if !(got_w && got_b && got_s) {
            return Err(bad("incomplete record"));
        }
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_record()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path, cfg: RerankConfig) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_record(&text, cfg)
    }
}

/// Positive feature of `estimate` and negatives from pool boxes overlapping
/// it by less than `neg_overlap`.
fn training_set(
    estimate: &BoundingBox,
    pool: &[ScoredBox],
    es: &EdgeStructures,
    kappa: f64,
    cfg: &RerankConfig,
) -> (RerankFeature, Vec<RerankFeature>) {
    let negs: Vec<BoundingBox> = pool
        .iter()
        .take(cfg.train_pool)
        .map(|s| s.bbox)
        .filter(|b| b.iou(estimate) < cfg.neg_overlap)
        .collect();
    (rerank_feature(estimate, es, kappa), rerank_features(&negs, es, kappa))
}

/// Train a fresh model on the first frame. `pool` should be sorted by
/// objectness; its first `train_pool` entries are used.
pub fn init_rerank(
    estimate: &BoundingBox,
    pool: &[ScoredBox],
    es: &EdgeStructures,
    kappa: f64,
    cfg: &RerankConfig,
) -> RerankModel {
    let mut model = RerankModel::zero(cfg.clone());
    let (pos, negs) = training_set(estimate, pool, es, kappa, cfg);
    model.fit(pos, &negs, cfg.init_epochs);
    model
}

/// Warm-started update on frames whose index is a multiple of the update
/// period; returns whether the model was trained.
pub fn update_rerank(
    model: &mut RerankModel,
    frame_index: usize,
    estimate: &BoundingBox,
    pool: &[ScoredBox],
    es: &EdgeStructures,
    kappa: f64,
) -> bool {
    if frame_index % model.cfg.update_period != 0 {
        return false;
    }
    let (pos, negs) = training_set(estimate, pool, es, kappa, &model.cfg);
    if negs.is_empty() {
        return false;
    }
    let epochs = model.cfg.update_epochs;
    model.fit(pos, &negs, epochs);
    true
}

/// Score every pool box with the model and keep the best `h`.
pub fn rerank_select(
    pool: &[ScoredBox],
    model: &RerankModel,
    es: &EdgeStructures,
    kappa: f64,
    h: usize,
) -> Vec<ScoredBox> {
    let mut out: Vec<ScoredBox> = if model.is_zero() {
        pool.iter()
            .map(|s| ScoredBox {
                rerank_score: 0.0,
                ..*s
            })
            .collect()
    } else {
        let boxes: Vec<BoundingBox> = pool.iter().map(|s| s.bbox).collect();
        rerank_features(&boxes, es, kappa)
            .iter()
            .zip(pool)
            .map(|(f, s)| ScoredBox {
                rerank_score: model.decision(f),
                ..*s
            })
            .collect()
    };
    out.sort_by(|a, b| match b.rerank_score.total_cmp(&a.rerank_score) {
        Ordering::Equal => by_objectness(a, b),
        o => o,
    });
    out.truncate(h);
    out
}

#[cfg(test)]
mod tests;
