//! Per-frame edge structures for objectness scoring.
//!
//! A frame is reduced to a thinned Sobel edge map, which is partitioned into
//! contour segments ("groups") with pairwise affinities. The structure also
//! carries the lookup tables the box scorer needs: per-row and per-column
//! runs of grouped pixels and two integral images.

mod gradient;
mod grouping;
mod nms;

use std::f64::consts::FRAC_PI_2;
use std::fmt::Write as _;
use std::path::Path;

pub use gradient::{compute_gradients, GradientMaps, SOBEL_MAX};
pub use grouping::{
    group_affinities, group_edges, orientation_diff, pair_affinity, EdgeGroup, NO_GROUP,
};
pub use nms::nms_edges;

use crate::error::{Error, Result};
use crate::imgio::{write_pgm, Image};

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct EdgeConfig {
    /// Thinned pixels with magnitude above this join a group.
    pub group_threshold: f64,
    /// Accumulated orientation change (radians) that ends a grouping walk.
    pub turn_budget: f64,
    pub affinity_gamma: f64,
    pub affinity_floor: f64,
    /// Chebyshev radius within which two groups count as adjacent.
    pub affinity_radius: usize,
}

impl Default for EdgeConfig {
    fn default() -> Self {
        Self {
            group_threshold: 0.1,
            turn_budget: FRAC_PI_2,
            affinity_gamma: 2.0,
            affinity_floor: 0.05,
            affinity_radius: 2,
        }
    }
}

/// Immutable per-frame edge data shared by all scoring workers.
#[derive(Debug, Clone)]
pub struct EdgeStructures {
    pub width: usize,
    pub height: usize,
    /// Thinned magnitude in `[0, 1]`.
    pub magnitude: Vec<f64>,
    /// Gradient orientation in `[0, pi)`.
    pub orientation: Vec<f64>,
    pub labels: Vec<u32>,
    pub groups: Vec<EdgeGroup>,
    /// Sorted adjacency lists; `affinity[i]` holds `(j, a_ij)`.
    pub affinity: Vec<Vec<(u32, f64)>>,
    /// Representative pixel of each group: its rounded mean position.
    pub(crate) anchors: Vec<(u32, u32)>,
    /// Grouped pixels per row, sorted by x: `row_runs[row_start[y]..row_start[y + 1]]`.
    pub(crate) row_start: Vec<u32>,
    pub(crate) row_runs: Vec<(u32, u32)>,
    /// Grouped pixels per column, sorted by y.
    pub(crate) col_start: Vec<u32>,
    pub(crate) col_runs: Vec<(u32, u32)>,
    /// Integral image of group magnitudes placed at their anchors.
    pub(crate) group_integral: Vec<f64>,
    /// Integral image of grouped pixel magnitudes.
    pub(crate) edge_integral: Vec<f64>,
}

impl EdgeStructures {
    /// Full edge pipeline: gradients, thinning, grouping, affinities, indices.
    pub fn build(frame: &Image, cfg: &EdgeConfig) -> Self {
        let grad = compute_gradients(frame);
        let thinned = nms_edges(grad.width, grad.height, &grad.magnitude, &grad.orientation);
        Self::from_thinned(grad.width, grad.height, thinned, grad.orientation, cfg)
    }

    /// Build from an already thinned map (fixtures construct these directly).
    pub fn from_thinned(
        width: usize,
        height: usize,
        thinned: Vec<f64>,
        orientation: Vec<f64>,
        cfg: &EdgeConfig,
    ) -> Self {
        let (groups, labels) = group_edges(
            width,
            height,
            &thinned,
            &orientation,
            cfg.group_threshold,
            cfg.turn_budget,
        );
        let affinity = group_affinities(
            width,
            height,
            &groups,
            &labels,
            cfg.affinity_radius,
            cfg.affinity_gamma,
            cfg.affinity_floor,
        );
        let mut es = Self {
            width,
            height,
            magnitude: thinned,
            orientation,
            labels,
            groups,
            affinity,
            anchors: Vec::new(),
            row_start: Vec::new(),
            row_runs: Vec::new(),
            col_start: Vec::new(),
            col_runs: Vec::new(),
            group_integral: Vec::new(),
            edge_integral: Vec::new(),
        };
        es.index();
        es
    }

    fn index(&mut self) {
        let (w, h) = (self.width, self.height);
        self.anchors = self
            .groups
            .iter()
            .map(|g| {
                let ax = (g.mean_x + 0.5).floor().clamp(0.0, (w - 1) as f64) as u32;
                let ay = (g.mean_y + 0.5).floor().clamp(0.0, (h - 1) as f64) as u32;
                (ax, ay)
            })
            .collect();

        self.row_start = Vec::with_capacity(h + 1);
        self.row_runs.clear();
        for y in 0..h {
            self.row_start.push(self.row_runs.len() as u32);
            for x in 0..w {
                let l = self.labels[y * w + x];
                if l != NO_GROUP {
                    self.row_runs.push((x as u32, l));
                }
            }
        }
        self.row_start.push(self.row_runs.len() as u32);

        self.col_start = Vec::with_capacity(w + 1);
        self.col_runs.clear();
        for x in 0..w {
            self.col_start.push(self.col_runs.len() as u32);
            for y in 0..h {
                let l = self.labels[y * w + x];
                if l != NO_GROUP {
                    self.col_runs.push((y as u32, l));
                }
            }
        }
        self.col_start.push(self.col_runs.len() as u32);

        let mut point_mass = vec![0.0; w * h];
        for (g, &(ax, ay)) in self.groups.iter().zip(&self.anchors) {
            point_mass[ay as usize * w + ax as usize] += g.magnitude;
        }
        self.group_integral = integral(w, h, &point_mass);
        let grouped: Vec<f64> = self
            .magnitude
            .iter()
            .zip(&self.labels)
            .map(|(&m, &l)| if l == NO_GROUP { 0.0 } else { m })
            .collect();
        self.edge_integral = integral(w, h, &grouped);
    }

    /// Copy with every edge magnitude multiplied by `factor`; groups,
    /// affinities and indices are kept as they are.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.magnitude.iter_mut().for_each(|m| *m *= factor);
        out.groups.iter_mut().for_each(|g| g.magnitude *= factor);
        out.group_integral.iter_mut().for_each(|v| *v *= factor);
        out.edge_integral.iter_mut().for_each(|v| *v *= factor);
        out
    }

    /// Affinity between two groups (1 on the diagonal, 0 when not adjacent).
    pub fn affinity_between(&self, i: u32, j: u32) -> f64 {
        if i == j {
            return 1.0;
        }
        let list = &self.affinity[i as usize];
        list.binary_search_by_key(&j, |&(k, _)| k)
            .map(|pos| list[pos].1)
            .unwrap_or(0.0)
    }

    pub(crate) fn row(&self, y: usize) -> &[(u32, u32)] {
        &self.row_runs[self.row_start[y] as usize..self.row_start[y + 1] as usize]
    }

    pub(crate) fn col(&self, x: usize) -> &[(u32, u32)] {
        &self.col_runs[self.col_start[x] as usize..self.col_start[x + 1] as usize]
    }

    /// Sum over `[x0, x1) x [y0, y1)` of an integral image built by [`integral`].
    #[inline]
    pub(crate) fn rect_sum(&self, table: &[f64], x0: usize, y0: usize, x1: usize, y1: usize) -> f64 {
        let s = self.width + 1;
        table[y1 * s + x1] - table[y0 * s + x1] - table[y1 * s + x0] + table[y0 * s + x0]
    }

    /// Thinned map as an 8-bit PGM (magnitude 1.0 maps to 255).
    pub fn write_edge_pgm(&self, path: &Path) -> Result<()> {
        let data = self
            .magnitude
            .iter()
            .map(|&m| (m * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        write_pgm(path, &Image::from_raw(self.width, self.height, 1, data))
    }

    /// `id,size,magnitude,mean_x,mean_y,theta` per group.
    pub fn groups_csv(&self) -> String {
        let mut s = String::from("id,size,magnitude,mean_x,mean_y,theta\n");
        for (i, g) in self.groups.iter().enumerate() {
            let _ = writeln!(
                s,
                "{i},{},{},{},{},{}",
                g.pixels.len(),
                g.magnitude,
                g.mean_x,
                g.mean_y,
                g.orientation
            );
        }
        s
    }

    pub fn write_groups_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.groups_csv()).map_err(|e| Error::io(path, e))
    }
}

/// `(w + 1) x (h + 1)` summed-area table.
pub(crate) fn integral(w: usize, h: usize, values: &[f64]) -> Vec<f64> {
    let s = w + 1;
    let mut t = vec![0.0; s * (h + 1)];
    for y in 0..h {
        let mut row = 0.0;
        for x in 0..w {
            row += values[y * w + x];
            t[(y + 1) * s + x + 1] = t[y * s + x + 1] + row;
        }
    }
    t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_frame() -> Image {
        Image::from_fn_gray(40, 40, |x, y| {
            if (10..26).contains(&x) && (10..26).contains(&y) {
                220
            } else {
                30
            }
        })
    }

    #[test]
    fn blank_frame_has_no_groups() {
        let es = EdgeStructures::build(&Image::new_rgb(32, 24, [90, 90, 90]), &EdgeConfig::default());
        assert!(es.groups.is_empty());
        assert!(es.magnitude.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn partition_and_symmetry_on_square() {
        let cfg = EdgeConfig::default();
        let es = EdgeStructures::build(&square_frame(), &cfg);
        assert!(!es.groups.is_empty());
        for i in 0..es.magnitude.len() {
            let grouped = es.labels[i] != NO_GROUP;
            assert_eq!(grouped, es.magnitude[i] > cfg.group_threshold);
        }
        for (i, list) in es.affinity.iter().enumerate() {
            for &(j, a) in list {
                assert!((0.0..=1.0).contains(&a));
                assert_eq!(es.affinity_between(j, i as u32), a);
            }
            assert_eq!(es.affinity_between(i as u32, i as u32), 1.0);
        }
        for g in &es.groups {
            let m: f64 = g.pixels.iter().map(|&p| es.magnitude[p as usize]).sum();
            assert!((m - g.magnitude).abs() < 1e-12);
        }
    }

    #[test]
    fn groups_are_eight_connected() {
        let es = EdgeStructures::build(&square_frame(), &EdgeConfig::default());
        for g in &es.groups {
            // flood within the group from its first pixel must reach every member
            let members: std::collections::HashSet<u32> = g.pixels.iter().copied().collect();
            let mut seen = std::collections::HashSet::new();
            let mut stack = vec![g.pixels[0]];
            while let Some(p) = stack.pop() {
                if !seen.insert(p) {
                    continue;
                }
                let (x, y) = ((p as usize % es.width) as isize, (p as usize / es.width) as isize);
                for dy in -1..=1 {
                    for dx in -1..=1 {
                        let q = ((y + dy) * es.width as isize + x + dx) as u32;
                        if members.contains(&q) {
                            stack.push(q);
                        }
                    }
                }
            }
            assert_eq!(seen.len(), members.len());
        }
    }

    #[test]
    fn integral_sums_match_direct() {
        let es = EdgeStructures::build(&square_frame(), &EdgeConfig::default());
        let direct: f64 = (5..30)
            .flat_map(|y| (8..20).map(move |x| (x, y)))
            .filter(|&(x, y)| es.labels[y * 40 + x] != NO_GROUP)
            .map(|(x, y)| es.magnitude[y * 40 + x])
            .sum();
        let fast = es.rect_sum(&es.edge_integral, 8, 5, 20, 30);
        assert!((direct - fast).abs() < 1e-9);
    }

    #[test]
    fn groups_csv_has_header_and_rows() {
        let es = EdgeStructures::build(&square_frame(), &EdgeConfig::default());
        let csv = es.groups_csv();
        assert_eq!(csv.lines().count(), es.groups.len() + 1);
        assert!(csv.starts_with("id,size,magnitude"));
    }
}
