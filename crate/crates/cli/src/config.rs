//! Flat, versioned run configuration.

use serde::{Deserialize, Serialize};

use ebt_core::edgemap::EdgeConfig;
use ebt_core::ncctracker::NccConfig;
use ebt_core::objectness::ProposalConfig;
use ebt_core::rerank::{RerankConfig, TrainingPool};
use ebt_core::sstracker::{SvmConfig, TrackerConfig};
use ebt_core::{Error, Result};

pub const SCHEMA: &str = "ebt-run/1";
pub const RERANK_LAYOUT: &str = "haar10-v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackerKind {
    Ebt,
    NccEb,
}

/// Candidate source for the test or update stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CandidateSet {
    /// Re-ranked proposals.
    #[serde(rename = "E")]
    Proposals,
    /// Samples around the previous estimate.
    #[serde(rename = "R")]
    Local,
    #[serde(rename = "E+R")]
    Both,
}

impl CandidateSet {
    pub const ALL: [CandidateSet; 3] = [CandidateSet::Local, CandidateSet::Proposals, CandidateSet::Both];

    pub fn label(self) -> &'static str {
        match self {
            CandidateSet::Proposals => "E",
            CandidateSet::Local => "R",
            CandidateSet::Both => "E+R",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "E" | "e" => Ok(CandidateSet::Proposals),
            "R" | "r" => Ok(CandidateSet::Local),
            "E+R" | "e+r" | "ER" | "er" => Ok(CandidateSet::Both),
            _ => Err(Error::config("candidate set", format!("{s} is not one of E, R, E+R"))),
        }
    }

    pub fn uses_proposals(self) -> bool {
        self != CandidateSet::Local
    }

    pub fn uses_local(self) -> bool {
        self != CandidateSet::Proposals
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub schema: String,
    pub tracker: TrackerKind,

    pub edge_group_threshold: f64,
    pub edge_turn_budget: f64,
    pub edge_affinity_gamma: f64,
    pub edge_affinity_floor: f64,
    pub edge_affinity_radius: usize,

    pub alpha: f64,
    pub beta: f64,
    pub area_min: f64,
    pub area_max: f64,
    pub objectness_floor: f64,
    pub max_proposals: usize,
    pub local_radius: f64,
    pub local_count: usize,
    pub aspect_steps: u32,
    pub kappa: f64,
    pub pool_cap: Option<usize>,
    /// Pixel spacing of the exhaustive local search used when testing on R.
    pub local_test_step: usize,

    pub rerank_enabled: bool,
    pub rerank_layout: String,
    pub rerank_lambda: f64,
    pub rerank_init_epochs: usize,
    pub rerank_update_epochs: usize,
    pub rerank_update_period: usize,
    pub rerank_neg_overlap: f64,
    pub rerank_train_pool: usize,
    pub rerank_training_pool: TrainingPool,

    pub svm_c: f64,
    pub svm_budget: usize,
    pub svm_reprocess_steps: usize,
    pub svm_optimize_steps: usize,
    pub patch_size: usize,
    pub smoothness: bool,
    pub smoothness_weight: f64,

    pub test_set: CandidateSet,
    pub update_set: CandidateSet,

    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let e = EdgeConfig::default();
        let p = ProposalConfig::default();
        let r = RerankConfig::default();
        let s = SvmConfig::default();
        let t = TrackerConfig::default();
        Self {
            schema: SCHEMA.into(),
            tracker: TrackerKind::Ebt,
            edge_group_threshold: e.group_threshold,
            edge_turn_budget: e.turn_budget,
            edge_affinity_gamma: e.affinity_gamma,
            edge_affinity_floor: e.affinity_floor,
            edge_affinity_radius: e.affinity_radius,
            alpha: p.alpha,
            beta: p.beta,
            area_min: p.area_min,
            area_max: p.area_max,
            objectness_floor: p.objectness_floor,
            max_proposals: p.max_proposals,
            local_radius: p.local_radius,
            local_count: p.local_count,
            aspect_steps: p.aspect_steps,
            kappa: p.kappa,
            pool_cap: p.pool_cap,
            local_test_step: 1,
            rerank_enabled: true,
            rerank_layout: RERANK_LAYOUT.into(),
            rerank_lambda: r.lambda,
            rerank_init_epochs: r.init_epochs,
            rerank_update_epochs: r.update_epochs,
            rerank_update_period: r.update_period,
            rerank_neg_overlap: r.neg_overlap,
            rerank_train_pool: r.train_pool,
            rerank_training_pool: r.training_pool,
            svm_c: s.c,
            svm_budget: s.budget,
            svm_reprocess_steps: s.reprocess_steps,
            svm_optimize_steps: s.optimize_steps,
            patch_size: t.patch_size,
            smoothness: true,
            smoothness_weight: t.smoothness_weight,
            test_set: CandidateSet::Proposals,
            update_set: CandidateSet::Both,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serialises")
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(Error::config("schema", format!("expected {SCHEMA}, got {}", self.schema)));
        }
        if self.rerank_layout != RERANK_LAYOUT {
            return Err(Error::config("rerank_layout", format!("only {RERANK_LAYOUT} is available")));
        }
        if self.local_test_step == 0 {
            return Err(Error::config("local_test_step", "must be >= 1"));
        }
        if self.local_count == 0 {
            return Err(Error::config("local_count", "must be >= 1"));
        }
        self.proposal().validate()?;
        self.rerank().validate()?;
        self.tracker_config().validate()?;
        Ok(())
    }

    pub fn edges(&self) -> EdgeConfig {
        EdgeConfig {
            group_threshold: self.edge_group_threshold,
            turn_budget: self.edge_turn_budget,
            affinity_gamma: self.edge_affinity_gamma,
            affinity_floor: self.edge_affinity_floor,
            affinity_radius: self.edge_affinity_radius,
        }
    }

    pub fn proposal(&self) -> ProposalConfig {
        ProposalConfig {
            alpha: self.alpha,
            beta: self.beta,
            area_min: self.area_min,
            area_max: self.area_max,
            objectness_floor: self.objectness_floor,
            max_proposals: self.max_proposals,
            local_radius: self.local_radius,
            local_count: self.local_count,
            aspect_steps: self.aspect_steps,
            kappa: self.kappa,
            pool_cap: self.pool_cap,
        }
    }

    pub fn rerank(&self) -> RerankConfig {
        RerankConfig {
            lambda: self.rerank_lambda,
            init_epochs: self.rerank_init_epochs,
            update_epochs: self.rerank_update_epochs,
            update_period: self.rerank_update_period,
            neg_overlap: self.rerank_neg_overlap,
            train_pool: self.rerank_train_pool,
            training_pool: self.rerank_training_pool,
            seed: self.seed,
        }
    }

    fn effective_smoothness(&self) -> f64 {
        if self.smoothness {
            self.smoothness_weight
        } else {
            0.0
        }
    }

    pub fn tracker_config(&self) -> TrackerConfig {
        TrackerConfig {
            svm: SvmConfig {
                c: self.svm_c,
                budget: self.svm_budget,
                reprocess_steps: self.svm_reprocess_steps,
                optimize_steps: self.svm_optimize_steps,
            },
            patch_size: self.patch_size,
            smoothness_weight: self.effective_smoothness(),
            fallback_radius: self.local_radius,
            fallback_count: self.local_count,
            seed: self.seed,
        }
    }

    pub fn ncc_config(&self) -> NccConfig {
        NccConfig {
            patch_size: self.patch_size,
            smoothness_weight: self.effective_smoothness(),
            fallback_radius: self.local_radius,
            fallback_count: self.local_count,
            seed: self.seed,
        }
    }
}
