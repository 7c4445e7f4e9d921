//! Primal stochastic sub-gradient training of a linear SVM.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::FEATURE_DIM;

/// Weights with the bias folded in as the last coordinate.
pub(crate) type Augmented = [f64; FEATURE_DIM + 1];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochStat {
    pub objective: f64,
    pub positive_margin: f64,
}

pub(crate) fn augment(x: &[f64; FEATURE_DIM]) -> Augmented {
    let mut a = [1.0; FEATURE_DIM + 1];
    a[..FEATURE_DIM].copy_from_slice(x);
    a
}

fn dot(w: &Augmented, x: &Augmented) -> f64 {
    w.iter().zip(x).map(|(a, b)| a * b).sum()
}

/// `lambda/2 |w|^2 + mean hinge loss`.
pub(crate) fn objective(w: &Augmented, xs: &[Augmented], ys: &[f64], lambda: f64) -> f64 {
    let reg = 0.5 * lambda * dot(w, w);
    let loss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - y * dot(w, x)).max(0.0))
        .sum();
    reg + loss / xs.len() as f64
}

/// Run `epochs` shuffled passes starting from `w` and step `t`.
///
/// Each epoch ends by comparing the objective against the best iterate seen
/// so far; the returned weights are that best iterate, so the objective
/// never exceeds its starting value. `positive` indexes the example whose
/// margin is reported in the trace.
pub(crate) fn train(
    w: &mut Augmented,
    step: &mut u64,
    xs: &[Augmented],
    ys: &[f64],
    lambda: f64,
    epochs: usize,
    seed: u64,
    positive: usize,
) -> Vec<EpochStat> {
    let mut best = *w;
    let mut best_obj = objective(w, xs, ys, lambda);
    let mut trace = vec![EpochStat {
        objective: best_obj,
        positive_margin: ys[positive] * dot(w, &xs[positive]),
    }];
    let radius = 1.0 / lambda.sqrt();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ step.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let mut cur = *w;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            *step += 1;
            let eta = 1.0 / (lambda * *step as f64);
            let violated = ys[i] * dot(&cur, &xs[i]) < 1.0;
            let shrink = 1.0 - eta * lambda;
            for (k, c) in cur.iter_mut().enumerate() {
                *c *= shrink;
                if violated {
                    *c += eta * ys[i] * xs[i][k];
                }
            }
            let norm = dot(&cur, &cur).sqrt();
            if norm > radius {
                let f = radius / norm;
                cur.iter_mut().for_each(|c| *c *= f);
            }
        }
        let obj = objective(&cur, xs, ys, lambda);
        if obj <= best_obj {
            best_obj = obj;
            best = cur;
        }
        trace.push(EpochStat {
            objective: best_obj,
            positive_margin: ys[positive] * dot(&best, &xs[positive]),
        });
    }
    *w = best;
    trace
}
