//! Whole-frame window proposals scored by edge enclosure.

mod candidates;
mod nms;
mod score;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::edgemap::EdgeStructures;
use crate::error::{Error, Result};
use crate::imgio::BoundingBox;

pub use candidates::{generate_candidates, sample_local, sample_local_dense};
pub use nms::{by_objectness, nms_boxes};
pub use score::{score_box, BoxScorer, CHAIN_FLOOR};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredBox {
    pub bbox: BoundingBox,
    pub objectness: f64,
    pub rerank_score: f64,
}

impl ScoredBox {
    pub fn new(bbox: BoundingBox, objectness: f64) -> Self {
        Self {
            bbox,
            objectness,
            rerank_score: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProposalConfig {
    /// Sliding-window step factor.
    pub alpha: f64,
    /// NMS IoU threshold.
    pub beta: f64,
    pub area_min: f64,
    pub area_max: f64,
    /// Minimum objectness kept in the pool (`e_T`).
    pub objectness_floor: f64,
    /// Proposals kept after re-ranking (`H`).
    pub max_proposals: usize,
    pub local_radius: f64,
    pub local_count: usize,
    /// Geometric size steps per dimension on each side of the previous size.
    pub aspect_steps: u32,
    pub kappa: f64,
    /// Optional cap on the pool before re-ranking; `None` keeps it whole.
    pub pool_cap: Option<usize>,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            alpha: 0.85,
            beta: 0.8,
            area_min: 0.5,
            area_max: 2.0,
            objectness_floor: 0.005,
            max_proposals: 200,
            local_radius: 30.0,
            local_count: 80,
            aspect_steps: 4,
            kappa: 1.5,
            pool_cap: None,
        }
    }
}

impl ProposalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha", format!("{} not in (0,1)", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::config("beta", format!("{} not in (0,1)", self.beta)));
        }
        if !(self.area_min > 0.0 && self.area_min < self.area_max && self.area_max.is_finite()) {
            return Err(Error::config(
                "area_min",
                format!("need 0 < area_min < area_max, got {} and {}", self.area_min, self.area_max),
            ));
        }
        if !(self.objectness_floor >= 0.0) {
            return Err(Error::config("objectness_floor", "must be >= 0"));
        }
        if self.max_proposals == 0 {
            return Err(Error::config("max_proposals", "must be >= 1"));
        }
        if !(self.local_radius >= 0.0 && self.local_radius.is_finite()) {
            return Err(Error::config("local_radius", "must be finite and >= 0"));
        }
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::config("kappa", "must be > 0"));
        }
        if self.pool_cap == Some(0) {
            return Err(Error::config("pool_cap", "must be >= 1 when set"));
        }
        Ok(())
    }
}

/// Candidate pool for one frame: every sliding window around `prev`'s size
/// scoring at least the floor, after NMS, in descending objectness.
pub fn propose(es: &EdgeStructures, prev: &BoundingBox, cfg: &ProposalConfig) -> Vec<ScoredBox> {
    let cands = generate_candidates(prev, es.width, es.height, cfg);
    let floor = cfg.objectness_floor;
    let scored: Vec<ScoredBox> = cands
        .par_iter()
        .map_init(
            || BoxScorer::new(es, cfg.kappa),
            |sc, b| sc.score_at_least(b, floor).map(|s| ScoredBox::new(*b, s)),
        )
        .flatten()
        .collect();
    let mut pool = nms_boxes(scored, cfg.beta);
    if let Some(cap) = cfg.pool_cap {
        pool.truncate(cap);
    }
    pool
}

/// Proposals as `x,y,w,h,objectness` CSV rows (0-based pixel coordinates).
pub fn proposals_csv(pool: &[ScoredBox]) -> String {
    let mut s = String::from("x,y,w,h,objectness,rerank\n");
    for p in pool {
        s.push_str(&format!(
            "{},{},{},{},{:.6},{:.6}\n",
            p.bbox.x, p.bbox.y, p.bbox.w, p.bbox.h, p.objectness, p.rerank_score
        ));
    }
    s
}
