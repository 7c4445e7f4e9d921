//! Edge-enclosure objectness of a single window.
//!
//! Groups anchored inside the window contribute their magnitude, discounted
//! by how strongly they connect (through chains of affinities) to groups
//! that cross the window border. Groups touching the border contribute
//! nothing. The sum is normalised by the window perimeter raised to `kappa`,
//! and the edge mass of the central half-size window is subtracted.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::edgemap::EdgeStructures;
use crate::imgio::{BoundingBox, PixelRect};

/// Smallest accepted product of affinities along a chain.
pub const CHAIN_FLOOR: f64 = 0.05;

#[derive(PartialEq)]
struct Reach(f64, u32);

impl Eq for Reach {}

impl Ord for Reach {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Reach {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Reusable scratch space for scoring many windows on one frame.
pub struct BoxScorer<'a> {
    es: &'a EdgeStructures,
    stamp: u32,
    mark: Vec<u32>,
    reach: Vec<f64>,
    touched: Vec<u32>,
    heap: BinaryHeap<Reach>,
    /// `1 / (2 p^kappa)` indexed by half-perimeter `p`.
    norms: Vec<f64>,
}

impl<'a> BoxScorer<'a> {
    pub fn new(es: &'a EdgeStructures, kappa: f64) -> Self {
        Self {
            es,
            stamp: 0,
            mark: vec![0; es.groups.len()],
            reach: vec![0.0; es.groups.len()],
            touched: Vec::new(),
            heap: BinaryHeap::new(),
            norms: (0..=es.width + es.height)
                .map(|p| 1.0 / (2.0 * (p as f64).powf(kappa)))
                .collect(),
        }
    }

    fn rect(&self, b: &BoundingBox) -> Option<PixelRect> {
        if !(b.w >= 2.0 && b.h >= 2.0) {
            return None;
        }
        b.pixel_rect(self.es.width, self.es.height)
            .filter(|r| r.width() >= 2 && r.height() >= 2)
    }

    fn normalizer(&self, r: &PixelRect) -> f64 {
        self.norms[r.width() + r.height()]
    }

    /// Edge mass of grouped pixels in the centred half-size window.
    fn center_mass(&self, r: &PixelRect) -> f64 {
        let (w, h) = (r.width() as f64, r.height() as f64);
        let inner = BoundingBox::new(r.x0 as f64 + w / 4.0, r.y0 as f64 + h / 4.0, w / 2.0, h / 2.0);
        match inner.pixel_rect(self.es.width, self.es.height) {
            Some(c) => self.es.rect_sum(&self.es.edge_integral, c.x0, c.y0, c.x1, c.y1),
            None => 0.0,
        }
    }

    /// Score ignoring the border discount; never below the true score.
    pub fn upper_bound(&self, b: &BoundingBox) -> f64 {
        let Some(r) = self.rect(b) else {
            return 0.0;
        };
        let inside = self.es.rect_sum(&self.es.group_integral, r.x0, r.y0, r.x1, r.y1);
        ((inside - self.center_mass(&r)) * self.normalizer(&r)).max(0.0)
    }

    #[inline]
    fn anchored_in(&self, g: u32, r: &PixelRect) -> bool {
        let (ax, ay) = self.es.anchors[g as usize];
        r.contains(ax as usize, ay as usize)
    }

    #[inline]
    fn seed(&mut self, g: u32) {
        let gi = g as usize;
        if self.mark[gi] != self.stamp {
            self.mark[gi] = self.stamp;
            self.reach[gi] = 1.0;
            self.touched.push(g);
            self.heap.push(Reach(1.0, g));
        }
    }

    /// Seed border groups and propagate the strongest affinity chain into
    /// every group anchored inside `r`. Results live in `mark`/`reach` under
    /// the current stamp; `touched` lists the reached groups.
    fn propagate(&mut self, r: &PixelRect) {
        self.seed_border(r);
        self.spread(r);
    }

    fn seed_border(&mut self, r: &PixelRect) {
        let es = self.es;
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.mark.iter_mut().for_each(|m| *m = 0);
            self.stamp = 1;
        }
        self.touched.clear();
        self.heap.clear();

        for y in [r.y0, r.y1 - 1] {
            let row = es.row(y);
            let start = row.partition_point(|&(x, _)| (x as usize) < r.x0);
            for &(x, g) in &row[start..] {
                if x as usize >= r.x1 {
                    break;
                }
                self.seed(g);
            }
        }
        for x in [r.x0, r.x1 - 1] {
            let col = es.col(x);
            let start = col.partition_point(|&(y, _)| (y as usize) <= r.y0);
            for &(y, g) in &col[start..] {
                if y as usize >= r.y1 - 1 {
                    break;
                }
                self.seed(g);
            }
        }
    }

    fn spread(&mut self, r: &PixelRect) {
        let es = self.es;
        while let Some(Reach(p, g)) = self.heap.pop() {
            if p < self.reach[g as usize] {
                continue;
            }
            for &(q, a) in &es.affinity[g as usize] {
                let wq = p * a;
                if wq < CHAIN_FLOOR || !self.anchored_in(q, r) {
                    continue;
                }
                let qi = q as usize;
                if self.mark[qi] == self.stamp {
                    if wq <= self.reach[qi] {
                        continue;
                    }
                } else {
                    self.mark[qi] = self.stamp;
                    self.touched.push(q);
                }
                self.reach[qi] = wq;
                self.heap.push(Reach(wq, q));
            }
        }
    }

    /// Objectness of `b`; 0 for windows thinner than 2 px, before or after clipping.
    pub fn score(&mut self, b: &BoundingBox) -> f64 {
        let Some(r) = self.rect(b) else {
            return 0.0;
        };
        let es = self.es;
        let inside = es.rect_sum(&es.group_integral, r.x0, r.y0, r.x1, r.y1);
        if inside <= 0.0 {
            return 0.0;
        }
        let center = self.center_mass(&r);
        self.propagate(&r);
        let mut removed = 0.0;
        for &g in &self.touched {
            if self.anchored_in(g, &r) {
                removed += self.reach[g as usize] * es.groups[g as usize].magnitude;
            }
        }
        let norm = self.normalizer(&r);
        ((inside - removed) * norm - center * norm).max(0.0)
    }

    /// Score of `b` if it reaches `floor`. Cheaper than [`BoxScorer::score`]
    /// on windows that fail, since the border groups alone often rule
    /// them out before any propagation.
    pub fn score_at_least(&mut self, b: &BoundingBox, floor: f64) -> Option<f64> {
        let r = self.rect(b)?;
        let es = self.es;
        let inside = es.rect_sum(&es.group_integral, r.x0, r.y0, r.x1, r.y1);
        let center = self.center_mass(&r);
        let norm = self.normalizer(&r);
        if inside <= 0.0 || inside * norm - center * norm < floor {
            return None;
        }
        self.seed_border(&r);
        let mut removed = 0.0;
        for &g in &self.touched {
            if self.anchored_in(g, &r) {
                removed += es.groups[g as usize].magnitude;
            }
        }
        if (inside - removed) * norm - center * norm < floor {
            return None;
        }
        self.spread(&r);
        let mut removed = 0.0;
        for &g in &self.touched {
            if self.anchored_in(g, &r) {
                removed += self.reach[g as usize] * es.groups[g as usize].magnitude;
            }
        }
        let s = ((inside - removed) * norm - center * norm).max(0.0);
        (s >= floor && s > 0.0).then_some(s)
    }

    /// Enclosure weight `w_b(s)` of every group anchored inside `b`, by
    /// group id. Groups on the border get 0.
    pub fn enclosure_weights(&mut self, b: &BoundingBox) -> Vec<(u32, f64)> {
        let Some(r) = self.rect(b) else {
            return Vec::new();
        };
        self.propagate(&r);
        let stamp = self.stamp;
        (0..self.es.groups.len() as u32)
            .filter(|&g| self.anchored_in(g, &r))
            .map(|g| {
                let reach = if self.mark[g as usize] == stamp {
                    self.reach[g as usize]
                } else {
                    0.0
                };
                (g, 1.0 - reach)
            })
            .collect()
    }
}

/// Objectness of one window. Prefer a [`BoxScorer`] when scoring many.
pub fn score_box(b: &BoundingBox, es: &EdgeStructures, kappa: f64) -> f64 {
    BoxScorer::new(es, kappa).score(b)
}
