//! Edge grouping and group affinities.
//!
//! Edge pixels are merged greedily into contour segments: starting from an
//! unassigned pixel, a best-first walk repeatedly absorbs the 8-connected
//! frontier pixel whose orientation differs least from the pixel that
//! discovered it, and stops once the accumulated orientation change reaches
//! the turn budget. Groups that lie close together are then linked by an
//! affinity that is high when both are aligned with the line joining them.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;
use std::f64::consts::{FRAC_PI_2, PI};

use super::gradient::fold_pi;

pub const NO_GROUP: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeGroup {
    /// Linear pixel indices (`y * width + x`) in walk order.
    pub pixels: Vec<u32>,
    /// Sum of member magnitudes.
    pub magnitude: f64,
    pub mean_x: f64,
    pub mean_y: f64,
    /// Edge tangent direction in `[0, pi)`.
    pub orientation: f64,
    /// Inclusive pixel bounds `(x0, y0, x1, y1)`.
    pub bounds: (u32, u32, u32, u32),
}

/// Orientation difference folded into `[0, pi/2]`.
#[inline]
pub fn orientation_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).abs() % PI;
    d.min(PI - d)
}

#[derive(PartialEq)]
struct Frontier {
    diff: f64,
    seq: u32,
    pixel: u32,
}

impl Eq for Frontier {}

impl Ord for Frontier {
    fn cmp(&self, other: &Self) -> Ordering {
        self.diff
            .total_cmp(&other.diff)
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Frontier {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Partition thinned edge pixels with magnitude above `threshold` into groups.
///
/// Returns the groups and a per-pixel label map (`NO_GROUP` for non-edge pixels).
pub fn group_edges(
    width: usize,
    height: usize,
    thinned: &[f64],
    orientation: &[f64],
    threshold: f64,
    turn_budget: f64,
) -> (Vec<EdgeGroup>, Vec<u32>) {
    let n = width * height;
    assert_eq!(thinned.len(), n);
    let mut labels = vec![NO_GROUP; n];
    let is_edge = |i: usize| thinned[i] > threshold;
    // pixel -> id of the group whose frontier already holds it
    let mut queued = vec![NO_GROUP; n];
    let mut heap = BinaryHeap::new();
    let mut groups = Vec::new();

    for seed in 0..n {
        if !is_edge(seed) || labels[seed] != NO_GROUP {
            continue;
        }
        let gid = groups.len() as u32;
        let mut pixels = Vec::new();
        let mut turned = 0.0;
        let mut seq = 0u32;
        let mut current = seed;
        heap.clear();
        queued[seed] = gid;
        loop {
            labels[current] = gid;
            pixels.push(current as u32);
            let (cx, cy) = ((current % width) as isize, (current / width) as isize);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let (nx, ny) = (cx + dx, cy + dy);
                    if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                        continue;
                    }
                    let j = ny as usize * width + nx as usize;
                    if !is_edge(j) || labels[j] != NO_GROUP || queued[j] == gid {
                        continue;
                    }
                    queued[j] = gid;
                    heap.push(Reverse(Frontier {
                        diff: orientation_diff(orientation[j], orientation[current]),
                        seq,
                        pixel: j as u32,
                    }));
                    seq += 1;
                }
            }
            let Some(Reverse(next)) = heap.pop() else {
                break;
            };
            turned += next.diff;
            if turned >= turn_budget {
                break;
            }
            current = next.pixel as usize;
        }
        // frontier pixels left behind become seeds of later groups
        for Reverse(f) in heap.drain() {
            queued[f.pixel as usize] = NO_GROUP;
        }
        groups.push(summarize(width, thinned, orientation, pixels));
    }
    (groups, labels)
}

fn summarize(width: usize, thinned: &[f64], orientation: &[f64], pixels: Vec<u32>) -> EdgeGroup {
    let mut magnitude = 0.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    let (mut c2, mut s2) = (0.0, 0.0);
    let mut bounds = (u32::MAX, u32::MAX, 0, 0);
    for &p in &pixels {
        let p = p as usize;
        let (x, y) = ((p % width) as u32, (p / width) as u32);
        let m = thinned[p];
        magnitude += m;
        sx += x as f64;
        sy += y as f64;
        let (s, c) = (2.0 * orientation[p]).sin_cos();
        c2 += m * c;
        s2 += m * s;
        bounds = (bounds.0.min(x), bounds.1.min(y), bounds.2.max(x), bounds.3.max(y));
    }
    let count = pixels.len() as f64;
    let gradient_dir = fold_pi(s2.atan2(c2) / 2.0);
    EdgeGroup {
        pixels,
        magnitude,
        mean_x: sx / count,
        mean_y: sy / count,
        orientation: fold_pi(gradient_dir + FRAC_PI_2),
        bounds,
    }
}

/// Pairwise affinity of two groups given their tangent orientations and the
/// angle of the line joining their mean positions.
#[inline]
pub fn pair_affinity(theta_i: f64, theta_j: f64, theta_ij: f64, gamma: f64) -> f64 {
    ((theta_i - theta_ij).cos() * (theta_j - theta_ij).cos())
        .abs()
        .powf(gamma)
        .min(1.0)
}

/// Symmetric sparse affinities between groups with member pixels within
/// `radius` (Chebyshev) of each other. Affinities below `floor` are dropped.
/// Each adjacency list is sorted by neighbour id.
pub fn group_affinities(
    width: usize,
    height: usize,
    groups: &[EdgeGroup],
    labels: &[u32],
    radius: usize,
    gamma: f64,
    floor: f64,
) -> Vec<Vec<(u32, f64)>> {
    let mut pairs: Vec<(u32, u32)> = Vec::new();
    let r = radius as isize;
    for y in 0..height as isize {
        for x in 0..width as isize {
            let s0 = labels[y as usize * width + x as usize];
            if s0 == NO_GROUP {
                continue;
            }
            for dy in -r..=r {
                for dx in -r..=r {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                        continue;
                    }
                    let s1 = labels[ny as usize * width + nx as usize];
                    if s1 != NO_GROUP && s1 > s0 {
                        pairs.push((s0, s1));
                    }
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    let mut adjacency = vec![Vec::new(); groups.len()];
    for (i, j) in pairs {
        let (gi, gj) = (&groups[i as usize], &groups[j as usize]);
        let theta_ij = (gj.mean_y - gi.mean_y).atan2(gj.mean_x - gi.mean_x);
        let a = pair_affinity(gi.orientation, gj.orientation, theta_ij, gamma);
        if a >= floor {
            adjacency[i as usize].push((j, a));
            adjacency[j as usize].push((i, a));
        }
    }
    for list in &mut adjacency {
        list.sort_unstable_by_key(|&(j, _)| j);
    }
    adjacency
}
