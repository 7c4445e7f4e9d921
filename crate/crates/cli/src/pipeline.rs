//! The per-frame loop: edges, proposals, re-ranking, core tracker, updates.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use ebt_core::edgemap::EdgeStructures;
use ebt_core::eval::{FrameOutput, OnlineTracker};
use ebt_core::imgio::{BoundingBox, Image};
use ebt_core::ncctracker::NccTracker;
use ebt_core::objectness::{propose, sample_local, sample_local_dense, ScoredBox};
use ebt_core::rerank::{init_rerank, rerank_select, update_rerank, RerankModel, TrainingPool};
use ebt_core::sstracker::SsTracker;
use ebt_core::{Error, Result};

use crate::config::{CandidateSet, RunConfig, TrackerKind};

/// Wall-clock seconds spent in each stage of one frame.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct StageTiming {
    pub edges: f64,
    pub propose: f64,
    pub rerank: f64,
    pub track: f64,
    pub update: f64,
}

impl StageTiming {
    pub fn total(&self) -> f64 {
        self.edges + self.propose + self.rerank + self.track + self.update
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrameRecord {
    pub frame: usize,
    pub bbox: BoundingBox,
    pub score: f64,
    /// Local samples replaced an empty candidate list.
    pub fallback: bool,
    /// Thresholded pool size before re-ranking.
    pub pool: usize,
    /// Re-ranked proposals kept.
    pub proposals: usize,
    pub timing: StageTiming,
}

enum Core {
    Ebt(SsTracker),
    Ncc(NccTracker),
}

/// Proposal-driven tracker over a whole sequence.
pub struct Pipeline {
    cfg: RunConfig,
    core: Option<Core>,
    rerank: Option<RerankModel>,
    rng: ChaCha8Rng,
    frame: usize,
    prev: BoundingBox,
    pub records: Vec<FrameRecord>,
    /// Pool and re-ranked selection of the latest frame.
    pub last_pool: Vec<ScoredBox>,
    pub last_selection: Vec<ScoredBox>,
}

fn timed<T>(slot: &mut f64, f: impl FnOnce() -> T) -> T {
    let t = Instant::now();
    let out = f();
    *slot += t.elapsed().as_secs_f64();
    out
}

fn boxes(v: &[ScoredBox]) -> Vec<BoundingBox> {
    v.iter().map(|s| s.bbox).collect()
}

impl Pipeline {
    pub fn new(cfg: RunConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_mul(0x2545_F491_4F6C_DD1D) ^ 0x6c6f_6361_6c),
            cfg,
            core: None,
            rerank: None,
            frame: 0,
            prev: BoundingBox::new(0.0, 0.0, 1.0, 1.0),
            records: Vec::new(),
            last_pool: Vec::new(),
            last_selection: Vec::new(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    pub fn rerank_model(&self) -> Option<&RerankModel> {
        self.rerank.as_ref()
    }

    pub fn ncc_tracker(&self) -> Option<&NccTracker> {
        match &self.core {
            Some(Core::Ncc(t)) => Some(t),
            _ => None,
        }
    }

    pub fn ss_tracker(&self) -> Option<&SsTracker> {
        match &self.core {
            Some(Core::Ebt(t)) => Some(t),
            _ => None,
        }
    }

    /// Pool, re-ranked selection, and local samples for the current frame.
    fn candidates(&mut self, es: &EdgeStructures, t: &mut StageTiming) -> (Vec<ScoredBox>, Vec<ScoredBox>, Vec<BoundingBox>) {
        let pcfg = self.cfg.proposal();
        let need_proposals = self.cfg.test_set.uses_proposals() || self.cfg.update_set.uses_proposals();
        let pool = if need_proposals {
            timed(&mut t.propose, || propose(es, &self.prev, &pcfg))
        } else {
            Vec::new()
        };
        let selection = timed(&mut t.rerank, || match (&self.rerank, self.cfg.rerank_enabled) {
            (Some(m), true) => rerank_select(&pool, m, es, pcfg.kappa, pcfg.max_proposals),
            _ => pool.iter().take(pcfg.max_proposals).copied().collect(),
        });
        let local = sample_local(
            &self.prev,
            self.cfg.local_radius,
            self.cfg.local_count,
            es.width,
            es.height,
            &mut self.rng,
        );
        (pool, selection, local)
    }

    fn set_boxes(&self, set: CandidateSet, selection: &[ScoredBox], local: &[BoundingBox], test: bool, w: usize, h: usize) -> Vec<BoundingBox> {
        match set {
            CandidateSet::Proposals => boxes(selection),
            CandidateSet::Local if test => {
                sample_local_dense(&self.prev, self.cfg.local_radius, self.cfg.local_test_step, w, h)
            }
            CandidateSet::Local => local.to_vec(),
            CandidateSet::Both => {
                let mut v = boxes(selection);
                v.extend_from_slice(local);
                v
            }
        }
    }

    fn init(&mut self, frame: &Image, b1: BoundingBox) -> Result<FrameOutput> {
        if !(b1.w >= 4.0 && b1.h >= 4.0) {
            return Err(Error::InvalidBox(format!("initial box {b1} is smaller than 4x4")));
        }
        let mut t = StageTiming::default();
        self.prev = b1;
        self.frame = 0;
        let es = timed(&mut t.edges, || EdgeStructures::build(frame, &self.cfg.edges()));
        let pcfg = self.cfg.proposal();
        let pool = timed(&mut t.propose, || propose(&es, &b1, &pcfg));
        if self.cfg.rerank_enabled {
            let rcfg = self.cfg.rerank();
            self.rerank = Some(timed(&mut t.rerank, || init_rerank(&b1, &pool, &es, pcfg.kappa, &rcfg)));
        }
        let selection = timed(&mut t.rerank, || match &self.rerank {
            Some(m) => rerank_select(&pool, m, &es, pcfg.kappa, pcfg.max_proposals),
            None => pool.iter().take(pcfg.max_proposals).copied().collect(),
        });
        let local = sample_local(&b1, self.cfg.local_radius, self.cfg.local_count, frame.width(), frame.height(), &mut self.rng);
        let negatives = self.set_boxes(self.cfg.update_set, &selection, &local, false, frame.width(), frame.height());
        self.core = Some(timed(&mut t.update, || -> Result<Core> {
            Ok(match self.cfg.tracker {
                TrackerKind::Ebt => Core::Ebt(SsTracker::init(frame, b1, &negatives, self.cfg.tracker_config())?),
                TrackerKind::NccEb => Core::Ncc(NccTracker::init(frame, b1, self.cfg.ncc_config())?),
            })
        })?);
        self.records.push(FrameRecord {
            frame: 0,
            bbox: b1,
            score: 0.0,
            fallback: false,
            pool: pool.len(),
            proposals: selection.len(),
            timing: t,
        });
        self.last_pool = pool;
        self.last_selection = selection;
        Ok(FrameOutput { bbox: b1, score: 0.0 })
    }

    fn track(&mut self, frame: &Image) -> Result<FrameOutput> {
        let Some(mut core) = self.core.take() else {
            return Err(Error::config("pipeline", "step called before start"));
        };
        self.frame += 1;
        let (w, h) = (frame.width(), frame.height());
        let mut t = StageTiming::default();
        let es = timed(&mut t.edges, || EdgeStructures::build(frame, &self.cfg.edges()));
        let (pool, selection, local) = self.candidates(&es, &mut t);
        let test = self.set_boxes(self.cfg.test_set, &selection, &local, true, w, h);
        let est = timed(&mut t.track, || match &mut core {
            Core::Ebt(s) => s.track_step(frame, &test),
            Core::Ncc(n) => n.track_step(frame, &test),
        });
        let est = match est {
            Ok(e) => e,
            Err(e) => {
                self.core = Some(core);
                return Err(e);
            }
        };
        let update_result = timed(&mut t.update, || -> Result<()> {
            if let Core::Ebt(s) = &mut core {
                let negatives = self.set_boxes(self.cfg.update_set, &selection, &local, false, w, h);
                s.update(frame, &est.bbox, &negatives)?;
            }
            if let Some(model) = self.rerank.as_mut() {
                let kappa = self.cfg.kappa;
                let train = match self.cfg.rerank_training_pool {
                    TrainingPool::Objectness => &pool,
                    TrainingPool::Reranked => &selection,
                };
                update_rerank(model, self.frame, &est.bbox, train, &es, kappa);
            }
            Ok(())
        });
        self.core = Some(core);
        update_result?;
        self.prev = est.bbox;
        self.records.push(FrameRecord {
            frame: self.frame,
            bbox: est.bbox,
            score: est.score,
            fallback: est.fallback,
            pool: pool.len(),
            proposals: selection.len(),
            timing: t,
        });
        self.last_pool = pool;
        self.last_selection = selection;
        Ok(FrameOutput {
            bbox: est.bbox,
            score: est.score,
        })
    }

    /// `frame,edges,propose,rerank,track,update,total` rows in seconds.
    pub fn timing_csv(&self) -> String {
        let mut s = String::from("frame,edges,propose,rerank,track,update,total\n");
        for r in &self.records {
            let t = r.timing;
            s.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.frame,
                t.edges,
                t.propose,
                t.rerank,
                t.track,
                t.update,
                t.total()
            ));
        }
        s
    }
}

impl OnlineTracker for Pipeline {
    fn start(&mut self, frame: &Image, init: BoundingBox) -> Result<()> {
        self.records.clear();
        self.init(frame, init).map(|_| ())
    }

    fn step(&mut self, frame: &Image) -> Result<FrameOutput> {
        self.track(frame)
    }
}
