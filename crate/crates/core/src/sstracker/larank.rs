//! Budgeted online structured SVM solved with LaRank-style SMO steps.

use std::collections::{HashMap, HashSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::feature::{intersection_kernel, PatchFeature};
use crate::error::{Error, Result};
use crate::imgio::BoundingBox;

const TINY: f64 = 1e-8;
const MIN_GAIN: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmConfig {
    /// Slack penalty.
    pub c: f64,
    /// Maximum number of support vectors.
    pub budget: usize,
    /// Reprocess rounds after each new pattern.
    pub reprocess_steps: usize,
    /// Optimize steps per reprocess round.
    pub optimize_steps: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 100.0,
            budget: 100,
            reprocess_steps: 10,
            optimize_steps: 10,
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config("c", "must be > 0"));
        }
        if self.budget < 2 {
            return Err(Error::config("budget", "must be >= 2"));
        }
        Ok(())
    }
}

/// One training frame: candidate outputs with their features; entry 0 is
/// the labelled box.
struct Pattern {
    id: usize,
    boxes: Vec<BoundingBox>,
    feats: Vec<PatchFeature>,
    loss: Vec<f64>,
    /// Kernel of each candidate against support vectors, keyed by the
    /// vector's (pattern id, candidate index).
    columns: HashMap<(usize, usize), Vec<f64>>,
}

#[derive(Clone, Copy, Debug)]
struct Sv {
    pat: usize,
    y: usize,
    beta: f64,
    grad: f64,
}

/// Support vector as seen from outside the solver.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SupportVector {
    pub pattern: usize,
    pub bbox: BoundingBox,
    pub coefficient: f64,
    pub positive: bool,
}

pub struct Larank {
    cfg: SvmConfig,
    patterns: Vec<Pattern>,
    svs: Vec<Sv>,
    kernel: Vec<Vec<f64>>,
    rng: ChaCha8Rng,
    /// Dual objective before and after every SMO step of the latest update.
    pub dual_trace: Vec<(f64, f64)>,
}

impl Larank {
    pub fn new(cfg: SvmConfig, seed: u64) -> Self {
        Self {
            cfg,
            patterns: Vec::new(),
            svs: Vec::new(),
            kernel: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            dual_trace: Vec::new(),
        }
    }

    pub fn config(&self) -> &SvmConfig {
        &self.cfg
    }

    pub fn num_support_vectors(&self) -> usize {
        self.svs.len()
    }

    pub fn num_patterns(&self) -> usize {
        self.patterns.len()
    }

    pub fn support_vectors(&self) -> Vec<SupportVector> {
        self.svs
            .iter()
            .map(|s| {
                let p = &self.patterns[s.pat];
                SupportVector {
                    pattern: p.id,
                    bbox: p.boxes[s.y],
                    coefficient: s.beta,
                    positive: s.y == 0,
                }
            })
            .collect()
    }

    /// Decision value `sum_i beta_i k(x_i, f)`.
    pub fn evaluate(&self, f: &PatchFeature) -> f64 {
        self.svs
            .iter()
            .map(|s| s.beta * intersection_kernel(self.feat(s), f))
            .sum()
    }

    fn feat(&self, s: &Sv) -> &PatchFeature {
        &self.patterns[s.pat].feats[s.y]
    }

    fn loss(&self, s: &Sv) -> f64 {
        self.patterns[s.pat].loss[s.y]
    }

    /// `-sum loss_i beta_i - 1/2 sum beta_i beta_j K_ij`.
    pub fn dual(&self) -> f64 {
        let mut lin = 0.0;
        let mut quad = 0.0;
        for (i, si) in self.svs.iter().enumerate() {
            lin -= self.loss(si) * si.beta;
            for (j, sj) in self.svs.iter().enumerate() {
                quad += si.beta * sj.beta * self.kernel[i][j];
            }
        }
        lin - 0.5 * quad
    }

    /// Add a labelled frame and re-optimise. `boxes[0]` is the estimate;
    /// the rest are outputs it must beat by a margin of `1 - IoU`.
    pub fn update(&mut self, id: usize, boxes: Vec<BoundingBox>, feats: Vec<PatchFeature>) {
        assert_eq!(boxes.len(), feats.len());
        self.dual_trace.clear();
        if boxes.len() < 2 {
            return;
        }
        let loss = boxes.iter().map(|b| 1.0 - b.iou(&boxes[0])).collect();
        self.patterns.push(Pattern {
            id,
            boxes,
            feats,
            loss,
            columns: HashMap::new(),
        });
        self.process_new(self.patterns.len() - 1);
        self.budget_maintenance();
        for _ in 0..self.cfg.reprocess_steps {
            self.process_old();
            for _ in 0..self.cfg.optimize_steps {
                self.optimize();
            }
            self.budget_maintenance();
        }
    }

    /// Candidate of pattern `pat` with the smallest gradient.
    fn min_gradient(&mut self, pat: usize) -> (usize, f64) {
        let mut columns = std::mem::take(&mut self.patterns[pat].columns);
        let keys: Vec<(usize, usize)> = self.svs.iter().map(|s| (self.patterns[s.pat].id, s.y)).collect();
        let live: HashSet<_> = keys.iter().copied().collect();
        columns.retain(|k, _| live.contains(k));
        let p = &self.patterns[pat];
        for (s, k) in self.svs.iter().zip(&keys) {
            if !columns.contains_key(k) {
                let sf = self.feat(s);
                columns.insert(*k, p.feats.par_iter().map(|f| intersection_kernel(sf, f)).collect());
            }
        }
        let cols: Vec<&Vec<f64>> = keys.iter().map(|k| &columns[k]).collect();
        let mut best = (0, f64::INFINITY);
        for (y, &l) in p.loss.iter().enumerate() {
            let f: f64 = self.svs.iter().zip(&cols).map(|(s, c)| s.beta * c[y]).sum();
            let g = -l - f;
            if g < best.1 {
                best = (y, g);
            }
        }
        self.patterns[pat].columns = columns;
        best
    }

    fn add_sv(&mut self, pat: usize, y: usize, grad: f64) -> usize {
        let f = &self.patterns[pat].feats[y];
        let row: Vec<f64> = self
            .svs
            .iter()
            .map(|s| intersection_kernel(self.feat(s), f))
            .collect();
        let kii = intersection_kernel(f, f);
        for (r, &k) in self.kernel.iter_mut().zip(&row) {
            r.push(k);
        }
        let mut row = row;
        row.push(kii);
        self.kernel.push(row);
        self.svs.push(Sv {
            pat,
            y,
            beta: 0.0,
            grad,
        });
        self.svs.len() - 1
    }

    fn remove_sv(&mut self, i: usize) {
        let last = self.svs.len() - 1;
        self.svs.swap(i, last);
        self.kernel.swap(i, last);
        for r in &mut self.kernel {
            r.swap(i, last);
            r.pop();
        }
        self.kernel.pop();
        let pat = self.svs.pop().unwrap().pat;
        if !self.svs.iter().any(|s| s.pat == pat) {
            self.remove_pattern(pat);
        }
    }

    fn remove_pattern(&mut self, pat: usize) {
        let last = self.patterns.len() - 1;
        self.patterns.swap_remove(pat);
        for s in &mut self.svs {
            if s.pat == last {
                s.pat = pat;
            }
        }
    }

    fn positive_of(&self, pat: usize) -> Option<usize> {
        self.svs.iter().position(|s| s.pat == pat && s.y == 0)
    }

    /// Move coefficient mass `amount` from SV `from` to SV `to`, keeping
    /// gradients exact.
    fn shift(&mut self, to: usize, from: usize, amount: f64) {
        self.svs[to].beta += amount;
        self.svs[from].beta -= amount;
        for (s, row) in self.svs.iter_mut().zip(&self.kernel) {
            s.grad -= amount * (row[to] - row[from]);
        }
    }

    fn smo_step(&mut self, ip: usize, in_: usize) {
        if ip == in_ {
            return;
        }
        let pat = self.svs[ip].pat;
        assert_eq!(pat, self.svs[in_].pat);
        let before = self.dual();
        let gap = self.svs[ip].grad - self.svs[in_].grad;
        if gap >= MIN_GAIN {
            let kii = self.kernel[ip][ip] + self.kernel[in_][in_] - 2.0 * self.kernel[ip][in_];
            let unconstrained = if kii > 1e-12 { gap / kii } else { f64::INFINITY };
            let cap = if self.svs[ip].y == 0 { self.cfg.c } else { 0.0 };
            let l = unconstrained.min(cap - self.svs[ip].beta).max(0.0);
            self.shift(ip, in_, l);
        }
        let after = self.dual();
        assert!(
            after >= before - 1e-9 * (1.0 + before.abs()),
            "dual decreased: {before} -> {after}"
        );
        self.dual_trace.push((before, after));
        self.prune(pat);
    }

    /// Drop negligible support vectors of a pattern, folding their mass into
    /// the pattern's positive vector so the coefficients still sum to zero.
    fn prune(&mut self, pat: usize) {
        let Some(mut pos) = self.positive_of(pat) else {
            return;
        };
        let mut i = 0;
        while i < self.svs.len() {
            let s = self.svs[i];
            if s.pat == pat && s.y != 0 && s.beta.abs() < TINY {
                self.shift(pos, i, -s.beta);
                self.remove_sv(i);
                pos = self.positive_of(pat).expect("positive vector survives");
            } else {
                i += 1;
            }
        }
        if self.svs[pos].beta.abs() < TINY && self.svs.iter().filter(|s| s.pat == pat).count() == 1 {
            self.remove_sv(pos);
        }
    }

    fn process_new(&mut self, pat: usize) {
        let f0 = &self.patterns[pat].feats[0];
        let g0 = -self.evaluate(f0);
        let (y, g) = self.min_gradient(pat);
        let ip = self.add_sv(pat, 0, g0);
        if y == 0 {
            self.remove_sv(ip);
            return;
        }
        let in_ = self.add_sv(pat, y, g);
        self.smo_step(ip, in_);
    }

    /// SV of `pat` with the largest gradient whose coefficient can grow.
    fn max_increasable(&self, pat: usize) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, s) in self.svs.iter().enumerate() {
            if s.pat != pat {
                continue;
            }
            let cap = if s.y == 0 { self.cfg.c } else { 0.0 };
            if s.beta < cap && best.map_or(true, |b| s.grad > self.svs[b].grad) {
                best = Some(i);
            }
        }
        best
    }

    fn process_old(&mut self) {
        if self.patterns.is_empty() {
            return;
        }
        let pat = self.rng.gen_range(0..self.patterns.len());
        let Some(ip) = self.max_increasable(pat) else {
            return;
        };
        let (y, g) = self.min_gradient(pat);
        let in_ = match self.svs.iter().position(|s| s.pat == pat && s.y == y) {
            Some(i) => i,
            None => self.add_sv(pat, y, g),
        };
        self.smo_step(ip, in_);
    }

    fn optimize(&mut self) {
        if self.patterns.is_empty() {
            return;
        }
        let pat = self.rng.gen_range(0..self.patterns.len());
        let Some(ip) = self.max_increasable(pat) else {
            return;
        };
        let mut in_: Option<usize> = None;
        for (i, s) in self.svs.iter().enumerate() {
            if s.pat == pat && in_.map_or(true, |b| s.grad < self.svs[b].grad) {
                in_ = Some(i);
            }
        }
        if let Some(in_) = in_ {
            self.smo_step(ip, in_);
        }
    }

    /// Evict negative vectors until the budget holds, each time the one
    /// whose removal changes the weight vector least.
    fn budget_maintenance(&mut self) {
        while self.svs.len() > self.cfg.budget {
            let mut best: Option<(f64, usize, usize)> = None;
            for (i, s) in self.svs.iter().enumerate() {
                if s.beta >= 0.0 {
                    continue;
                }
                let Some(p) = self.positive_of(s.pat) else {
                    continue;
                };
                let k = &self.kernel;
                let val = s.beta * s.beta * (k[i][i] + k[p][p] - 2.0 * k[i][p]);
                if best.map_or(true, |(v, _, _)| val < v) {
                    best = Some((val, i, p));
                }
            }
            let Some((_, n, p)) = best else {
                break;
            };
            let pat = self.svs[n].pat;
            let b = self.svs[n].beta;
            self.svs[p].beta += b;
            self.svs[n].beta = 0.0;
            self.remove_sv(n);
            if let Some(p) = self.positive_of(pat) {
                if self.svs[p].beta < TINY && self.svs.iter().filter(|s| s.pat == pat).count() == 1 {
                    self.remove_sv(p);
                }
            }
            self.refresh_gradients();
        }
    }

    fn refresh_gradients(&mut self) {
        let betas: Vec<f64> = self.svs.iter().map(|s| s.beta).collect();
        for i in 0..self.svs.len() {
            let f: f64 = self.kernel[i].iter().zip(&betas).map(|(k, b)| k * b).sum();
            self.svs[i].grad = -self.loss(&self.svs[i]) - f;
        }
    }

    /// Coefficient sum of each pattern, by pattern id.
    pub fn pattern_sums(&self) -> Vec<(usize, f64)> {
        self.patterns
            .iter()
            .enumerate()
            .map(|(pi, p)| {
                let s = self.svs.iter().filter(|s| s.pat == pi).map(|s| s.beta).sum();
                (p.id, s)
            })
            .collect()
    }

    /// Text dump: patterns with their candidate boxes, support vectors by
    /// (pattern, candidate index) with coefficient and cached gradient, and
    /// the generator position.
    pub fn to_record(&self) -> String {
        let mut s = String::new();
        let seed: String = self.rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        s.push_str(&format!("rng {seed} {}\n", self.rng.get_word_pos()));
        for p in &self.patterns {
            s.push_str(&format!("pattern {} {}\n", p.id, p.boxes.len()));
            for b in &p.boxes {
                s.push_str(&format!("box {:?} {:?} {:?} {:?}\n", b.x, b.y, b.w, b.h));
            }
        }
        for sv in &self.svs {
            s.push_str(&format!(
                "sv {} {} {:?} {:?}\n",
                self.patterns[sv.pat].id, sv.y, sv.beta, sv.grad
            ));
        }
        s
    }

    /// Rebuild a solver from [`Larank::to_record`] output; `feature` must
    /// reproduce the feature of a box in the frame a pattern came from.
    pub fn from_record<F>(cfg: SvmConfig, text: &str, mut feature: F) -> Result<Self>
    where
        F: FnMut(usize, &BoundingBox) -> Result<PatchFeature>,
    {
        let bad = |m: String| Error::Record(m);
        let mut solver = Self::new(cfg, 0);
        let mut lines = text.lines().filter(|l| !l.trim().is_empty()).peekable();
        let num = |t: Option<&str>| -> Result<f64> {
            t.and_then(|v| v.parse().ok()).ok_or_else(|| bad("bad number".into()))
        };
        while let Some(line) = lines.next() {
            let mut tok = line.split_whitespace();
            match tok.next() {
                Some("rng") => {
                    let hex = tok.next().ok_or_else(|| bad("rng seed".into()))?;
                    if hex.len() != 64 {
                        return Err(bad("rng seed length".into()));
                    }
                    let mut seed = [0u8; 32];
                    for (i, b) in seed.iter_mut().enumerate() {
                        *b = u8::from_str_radix(&hex[2 * i..2 * i + 2], 16)
                            .map_err(|_| bad("rng seed hex".into()))?;
                    }
                    let pos: u128 = tok
                        .next()
                        .and_then(|v| v.parse().ok())
                        .ok_or_else(|| bad("rng position".into()))?;
                    solver.rng = ChaCha8Rng::from_seed(seed);
                    solver.rng.set_word_pos(pos);
                }
                Some("pattern") => {
                    let id = num(tok.next())? as usize;
                    let n = num(tok.next())? as usize;
                    let mut boxes = Vec::with_capacity(n);
                    let mut feats = Vec::with_capacity(n);
                    for _ in 0..n {
                        let l = lines.next().ok_or_else(|| bad("truncated pattern".into()))?;
                        let mut t = l.split_whitespace();
                        if t.next() != Some("box") {
                            return Err(bad(format!("expected box line, got {l}")));
                        }
                        let b = BoundingBox::new(num(t.next())?, num(t.next())?, num(t.next())?, num(t.next())?);
                        feats.push(feature(id, &b)?);
                        boxes.push(b);
                    }
                    let loss = boxes.iter().map(|b| 1.0 - b.iou(&boxes[0])).collect();
                    solver.patterns.push(Pattern {
                        id,
                        boxes,
                        feats,
                        loss,
                        columns: HashMap::new(),
                    });
                }
                Some("sv") => {
                    let id = num(tok.next())? as usize;
                    let y = num(tok.next())? as usize;
                    let beta = num(tok.next())?;
                    let grad = num(tok.next())?;
                    let pat = solver
                        .patterns
                        .iter()
                        .position(|p| p.id == id)
                        .ok_or_else(|| bad(format!("sv refers to unknown pattern {id}")))?;
                    if y >= solver.patterns[pat].boxes.len() {
                        return Err(bad("sv candidate index out of range".into()));
                    }
                    let i = solver.add_sv(pat, y, grad);
                    solver.svs[i].beta = beta;
                }
                Some(other) => return Err(bad(format!("unknown record line {other}"))),
                None => {}
            }
        }
        Ok(solver)
    }
}
