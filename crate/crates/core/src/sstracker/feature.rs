//! Spatial-pyramid colour histograms and the intersection kernel.

use crate::error::{Error, Result};
use crate::imgio::{resample_indices, BoundingBox, Image};

pub const LEVELS: usize = 5;
pub const BINS: usize = 16;
pub const CHANNELS: usize = 3;
/// Histogram blocks over all levels: 1 + 4 + 9 + 16 + 25 cells, 3 channels.
pub const BLOCKS: usize = 55 * CHANNELS;
pub const FEATURE_LEN: usize = BLOCKS * BINS;
pub const DEFAULT_PATCH: usize = 60;

/// Offset of level `l` (1-based) in the feature vector.
const fn level_offset(l: usize) -> usize {
    let mut off = 0;
    let mut k = 1;
    while k < l {
        off += k * k * CHANNELS * BINS;
        k += 1;
    }
    off
}

/// Raw bin counts; each block is normalised by the pixel count of its cell.
#[derive(Clone, PartialEq, Eq)]
pub struct PatchFeature {
    counts: Box<[u16]>,
    patch: u32,
}

impl std::fmt::Debug for PatchFeature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "PatchFeature({}x{})", self.patch, self.patch)
    }
}

/// Patch sides whose level cells are all whole and whose counts fit in u16.
pub fn check_patch_size(patch: usize) -> Result<()> {
    if patch == 0 || patch % 60 != 0 || patch > 240 {
        return Err(Error::config("patch_size", format!("{patch} is not one of 60, 120, 180, 240")));
    }
    Ok(())
}

impl PatchFeature {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Pixels in one cell of level `l`.
    fn cell_pixels(&self, l: usize) -> u32 {
        let side = self.patch / l as u32;
        side * side
    }

    pub fn counts(&self) -> &[u16] {
        &self.counts
    }

    /// Normalised entry `d`.
    pub fn value(&self, d: usize) -> f64 {
        let mut l = LEVELS;
        while d < level_offset(l) {
            l -= 1;
        }
        self.counts[d] as f64 / self.cell_pixels(l) as f64
    }

    /// Normalised feature vector.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(FEATURE_LEN);
        for l in 1..=LEVELS {
            let n = self.cell_pixels(l) as f64;
            let r = level_offset(l)..level_offset(l + 1);
            out.extend(self.counts[r].iter().map(|&c| c as f64 / n));
        }
        out
    }
}

/// Histogram feature of `b` resampled to a `patch x patch` canonical patch.
pub fn extract_feature(img: &Image, b: &BoundingBox, patch: usize) -> Result<PatchFeature> {
    check_patch_size(patch)?;
    let (xs, ys) = resample_indices(img, b, patch, patch)?;
    let mut counts = vec![0u16; FEATURE_LEN].into_boxed_slice();
    let ch = img.channels();
    let data = img.data();
    let w = img.width();
    // Levels 3 to 5 are counted directly; level 2 cells are 2x2 blocks of
    // level 4 cells and level 1 is the sum of level 2.
    const DIRECT: [usize; 3] = [3, 4, 5];
    let mut col_off = vec![[0usize; 3]; patch];
    let mut row_off = vec![[0usize; 3]; patch];
    for (k, &l) in DIRECT.iter().enumerate() {
        let side = patch / l;
        for p in 0..patch {
            col_off[p][k] = level_offset(l) + (p / side) * CHANNELS * BINS;
            row_off[p][k] = (p / side) * l * CHANNELS * BINS;
        }
    }
    for (py, &sy) in ys.iter().enumerate() {
        let ro = &row_off[py];
        let row = &data[sy * w * ch..(sy + 1) * w * ch];
        for (px, &sx) in xs.iter().enumerate() {
            let i = sx * ch;
            let rgb = if ch == 3 {
                [row[i], row[i + 1], row[i + 2]]
            } else {
                [row[i]; 3]
            };
            let bins = [rgb[0] as usize >> 4, BINS + (rgb[1] as usize >> 4), 2 * BINS + (rgb[2] as usize >> 4)];
            let co = &col_off[px];
            for k in 0..3 {
                let base = ro[k] + co[k];
                for &b in &bins {
                    counts[base + b] = counts[base + b].wrapping_add(1);
                }
            }
        }
    }
    const BLOCK: usize = CHANNELS * BINS;
    for cy in 0..2 {
        for cx in 0..2 {
            let dst = level_offset(2) + (cy * 2 + cx) * BLOCK;
            for (sy, sx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                let src = level_offset(4) + ((2 * cy + sy) * 4 + 2 * cx + sx) * BLOCK;
                for d in 0..BLOCK {
                    counts[dst + d] += counts[src + d];
                }
            }
            for d in 0..BLOCK {
                counts[level_offset(1) + d] += counts[dst + d];
            }
        }
    }
    Ok(PatchFeature {
        counts,
        patch: patch as u32,
    })
}

/// `sum_d min(a_d, b_d)` over the normalised features.
pub fn intersection_kernel(a: &PatchFeature, b: &PatchFeature) -> f64 {
    assert_eq!(a.patch, b.patch, "features from different patch sizes");
    let mut sums = [0u32; LEVELS];
    level_min_sums(&a.counts, &b.counts, a.patch, &mut sums);
    (1..=LEVELS)
        .map(|l| sums[l - 1] as f64 / a.cell_pixels(l) as f64)
        .sum()
}

fn level_min_sums(a: &[u16], b: &[u16], patch: u32, out: &mut [u32; LEVELS]) {
    #[cfg(target_arch = "x86_64")]
    {
        if patch * patch <= i16::MAX as u32 && std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            unsafe { level_min_sums_avx2(a, b, out) };
            return;
        }
    }
    level_min_sums_generic(a, b, out)
}

#[cfg(target_arch = "x86_64")]
#[target_feature(enable = "avx2")]
unsafe fn level_min_sums_avx2(a: &[u16], b: &[u16], out: &mut [u32; LEVELS]) {
    use std::arch::x86_64::*;
    let ones = _mm256_set1_epi16(1);
    for (l, o) in (1..=LEVELS).zip(out.iter_mut()) {
        let r = level_offset(l)..level_offset(l + 1);
        let mut acc = _mm256_setzero_si256();
        for (x, y) in a[r.clone()].chunks_exact(16).zip(b[r].chunks_exact(16)) {
            let x = _mm256_loadu_si256(x.as_ptr() as *const __m256i);
            let y = _mm256_loadu_si256(y.as_ptr() as *const __m256i);
            // Pairwise widening add, exact while counts fit in i16.
            acc = _mm256_add_epi32(acc, _mm256_madd_epi16(_mm256_min_epu16(x, y), ones));
        }
        let mut lanes = [0u32; 8];
        _mm256_storeu_si256(lanes.as_mut_ptr() as *mut __m256i, acc);
        *o = lanes.iter().fold(0u32, |s, &v| s.wrapping_add(v));
    }
}

#[inline(always)]
fn level_min_sums_generic(a: &[u16], b: &[u16], out: &mut [u32; LEVELS]) {
    for (l, o) in (1..=LEVELS).zip(out.iter_mut()) {
        let r = level_offset(l)..level_offset(l + 1);
        *o = a[r.clone()]
            .iter()
            .zip(&b[r])
            .fold(0u32, |acc, (&x, &y)| acc.wrapping_add(x.min(y) as u32));
    }
}
