//! Seeded random fixtures shared by the CLI and the test suites.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub type Intervals = Vec<(f64, f64)>;

/// Disjoint unions `A`, `B` inside `(0, 1)` with a gap left over, each made of
/// 1 to 4 intervals separated from one another.
pub fn interval_pair(r: &mut impl Rng) -> (Intervals, Intervals) {
    loop {
        let n = r.random_range(3..10);
        let mut cuts: Vec<f64> = (0..n).map(|_| r.random::<f64>()).collect();
        cuts.push(0.0);
        cuts.push(1.0);
        cuts.sort_by(f64::total_cmp);
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let mut gap = false;
        for w in cuts.windows(2) {
            let len = w[1] - w[0];
            if len < 1e-3 {
                continue;
            }
            let m = len * r.random_range(0.02..0.2);
            let piece = (w[0] + m, w[1] - m);
            match r.random_range(0..3) {
                0 if a.len() < 4 => a.push(piece),
                1 if b.len() < 4 => b.push(piece),
                _ => gap = true,
            }
        }
        if gap && !a.is_empty() && !b.is_empty() {
            return (a, b);
        }
    }
}

/// Random profile with values in `[0, span]` built from a few smooth bumps.
pub fn profile_values(r: &mut impl Rng, x: &[f64], span: f64) -> Vec<f64> {
    let k = r.random_range(1..5);
    let bumps: Vec<(f64, f64, f64)> = (0..k)
        .map(|_| (r.random_range(-1.0..1.0), r.random_range(0.05..0.5), r.random_range(-1.0..1.0)))
        .collect();
    let raw: Vec<f64> = x
        .iter()
        .map(|&t| bumps.iter().map(|&(c, w, a)| a * (-((t - c) / w).powi(2)).exp()).sum::<f64>())
        .collect();
    let lo = raw.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let scale = if hi > lo { span / (hi - lo) } else { 0.0 };
    raw.iter().map(|v| (v - lo) * scale).collect()
}

/// Nodal values of a random smooth field: each component a sum of four plane
/// waves with wave vectors of length below 4.
pub fn smooth_field(r: &mut impl Rng, nodes: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let waves: Vec<[(f64, f64, f64, f64); 4]> = (0..2)
        .map(|_| {
            std::array::from_fn(|_| {
                (r.random_range(-1.0..1.0), r.random_range(-2.8..2.8), r.random_range(-2.8..2.8), r.random_range(0.0..6.3))
            })
        })
        .collect();
    nodes
        .iter()
        .map(|p| {
            let c = |w: &[(f64, f64, f64, f64); 4]| w.iter().map(|&(a, k1, k2, s)| a * (k1 * p[0] + k2 * p[1] + s).sin()).sum::<f64>();
            [c(&waves[0]), c(&waves[1])]
        })
        .collect()
}
