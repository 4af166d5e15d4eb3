//! Independent reference implementations used by the integration and
//! acceptance tests. Nothing here calls into the code under test.

#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best grid point by brute force over `k / denom` for `k = 0..=hi * denom`.
///
/// Labels are `true` for SAME. For similarity scores SAME is predicted when
/// `score >= t`; for distances when `score < t`. Per-class F1 is
/// `2TP / (2TP + FP + FN)`, 0 when the class is absent from both gold and
/// predictions. Macro-F1 is kept as an integer fraction so ties are exact;
/// they go to the smallest threshold. The returned metric is the fraction
/// rounded once to f64.
pub fn brute_force_sweep(scores: &[f64], gold: &[bool], similarity: bool, hi: u32, denom: u32) -> (f64, f64) {
    let mut best: Option<(f64, u128, u128)> = None;
    for k in 0..=hi * denom {
        let t = k as f64 / denom as f64;
        let (mut tp, mut fp, mut fn_, mut tn) = (0u128, 0u128, 0u128, 0u128);
        for (s, g) in scores.iter().zip(gold) {
            let pred = if similarity { *s >= t } else { *s < t };
            match (pred, *g) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
        // F1 as (numerator, denominator), with 0/1 for an absent class.
        let f1 = |tp: u128, fp: u128, fn_: u128| {
            let den = 2 * tp + fp + fn_;
            if den == 0 { (0, 1) } else { (2 * tp, den) }
        };
        let (a, b) = f1(tp, fp, fn_);
        let (c, d) = f1(tn, fn_, fp);
        let (num, den) = (a * d + c * b, 2 * b * d);
        match best {
            Some((_, bn, bd)) if num * bd <= bn * den => {}
            _ => best = Some((t, num, den)),
        }
    }
    let (t, num, den) = best.unwrap();
    (t, num as f64 / den as f64)
}

/// `y d^2 + (1 - y) max(0, m - d)^2` with `d = |a - b|`.
pub fn pair_loss(a: &[f64], b: &[f64], same: bool, margin: f64) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    if same { d * d } else { (margin - d).max(0.0).powi(2) }
}

/// Projects `x` by the row-major `rows x x.len()` matrix `p`.
pub fn project(p: &[f64], rows: usize, x: &[f64]) -> Vec<f64> {
    (0..rows)
        .map(|r| (0..x.len()).map(|c| p[r * x.len() + c] * x[c]).sum())
        .collect()
}

/// Loss of `(u, v)` after projecting each side separately.
pub fn projected_pair_loss(p: &[f64], rows: usize, u: &[f64], v: &[f64], same: bool, margin: f64) -> f64 {
    pair_loss(&project(p, rows, u), &project(p, rows, v), same, margin)
}

/// Central differences of `f` at `x` with step `h`.
pub fn central_difference(x: &[f64], h: f64, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = probe[i];
            probe[i] = orig + h;
            let up = f(&probe);
            probe[i] = orig - h;
            let down = f(&probe);
            probe[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// `|a - b| / (|a| + |b|)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = norm(&mut a.iter().copied()) + norm(&mut b.iter().copied());
    if scale == 0.0 { 0.0 } else { diff / scale }
}

/// One random gradient-check configuration: `(u, v, same, margin, p, rows)`.
pub struct GradCase {
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    pub same: bool,
    pub margin: f64,
    pub p: Vec<f64>,
    pub rows: usize,
}

/// Draws a configuration whose raw and projected distances both stay clear of
/// the margin kink, where central differences are meaningless.
pub fn grad_case(rng: &mut ChaCha8Rng) -> GradCase {
    loop {
        let n = rng.gen_range(1..8);
        let rows = rng.gen_range(1..6);
        let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let p: Vec<f64> = (0..rows * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let same = rng.gen_bool(0.5);
        let margin = rng.gen_range(0.5..3.0);
        let raw = pair_loss(&u, &v, true, 0.0).sqrt();
        let projected = pair_loss(&project(&p, rows, &u), &project(&p, rows, &v), true, 0.0).sqrt();
        if (raw - margin).abs() > 1e-3 && (projected - margin).abs() > 1e-3 && raw > 1e-3 && projected > 1e-3 {
            return GradCase { u, v, same, margin, p, rows };
        }
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `n` random `(scores, gold)` instances with scores on a 1e-3 lattice inside
/// `[0, hi]`, so many scores coincide with grid points.
pub fn random_sweep_instance(rng: &mut ChaCha8Rng, hi: f64) -> (Vec<f64>, Vec<bool>) {
    let n = rng.gen_range(1..=50);
    let lattice = rng.gen_bool(0.5);
    let scores = (0..n)
        .map(|_| {
            let s = rng.gen_range(0.0..hi);
            if lattice { (s * 1000.0).round() / 1000.0 } else { s }
        })
        .collect();
    let gold = (0..n).map(|_| rng.gen_bool(0.5)).collect();
    (scores, gold)
}
