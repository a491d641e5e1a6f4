//! Seeded random instance generators shared by the integration tests.
#![allow(dead_code)]

use gemqp_core::linalg::dot;
use gemqp_core::{GradientSet, PrimalQP};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| normal(rng)).collect()
}

pub fn normal_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows).map(|_| normal_vec(rng, cols)).collect()
}

/// `BᵀB + I` with standard-normal `B`.
pub fn random_spd(rng: &mut ChaCha8Rng, p: usize) -> Vec<Vec<f64>> {
    let b = normal_rows(rng, p, p);
    let mut c = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..p {
            c[i][j] = (0..p).map(|k| b[k][i] * b[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
        }
    }
    c
}

/// Generic QP with standard-normal `w`, `A`, `b` (may be infeasible).
pub fn random_qp(rng: &mut ChaCha8Rng, p: usize, m: usize) -> PrimalQP {
    let c = random_spd(rng, p);
    let w = normal_vec(rng, p);
    let a = normal_rows(rng, m, p);
    let b = normal_vec(rng, m);
    PrimalQP::from_rows(&c, w, &a, b).unwrap()
}

/// Generic QP whose feasible set contains a random point `z₀` with slack.
pub fn random_feasible_qp(rng: &mut ChaCha8Rng, p: usize, m: usize) -> PrimalQP {
    let c = random_spd(rng, p);
    let w = normal_vec(rng, p);
    let a = normal_rows(rng, m, p);
    let z0 = normal_vec(rng, p);
    let b = a.iter().map(|row| dot(row, &z0) + normal(rng).abs()).collect();
    PrimalQP::from_rows(&c, w, &a, b).unwrap()
}

/// Rejection-samples a point with `Az ≤ b` from `N(0, scale²I)`.
pub fn sample_feasible(rng: &mut ChaCha8Rng, qp: &PrimalQP, scale: f64, tries: usize) -> Option<Vec<f64>> {
    (0..tries).find_map(|_| {
        let z: Vec<f64> = normal_vec(rng, qp.dim()).into_iter().map(|x| scale * x).collect();
        let az = qp.a().mul_vec(&z);
        az.iter().zip(qp.b()).all(|(l, r)| l <= r).then_some(z)
    })
}

/// GEM instance with standard-normal `g` and memory gradients.
pub fn random_gem(rng: &mut ChaCha8Rng, p: usize, tasks: usize) -> GradientSet {
    let g = normal_vec(rng, p);
    let mem = normal_rows(rng, tasks, p);
    GradientSet::new(g, mem).unwrap()
}

/// GEM instance in which at least one memory gradient is duplicated, so
/// `GGᵀ` is singular.
pub fn random_gem_duplicated(rng: &mut ChaCha8Rng, p: usize, tasks: usize) -> GradientSet {
    assert!(tasks >= 2);
    let g = normal_vec(rng, p);
    let distinct = rng.random_range(1..tasks);
    let base = normal_rows(rng, distinct, p);
    let mut mem = base.clone();
    while mem.len() < tasks {
        let k = rng.random_range(0..distinct);
        mem.push(base[k].clone());
    }
    // Interleave so duplicates are not always trailing.
    let shift = rng.random_range(0..tasks);
    mem.rotate_left(shift);
    GradientSet::new(g, mem).unwrap()
}

/// Sizes used by the GEM acceptance instances: `p ∈ [2, 20]`, `t−1 ∈ [1, 6]`.
pub fn gem_sizes(rng: &mut ChaCha8Rng) -> (usize, usize) {
    (rng.random_range(2..=20), rng.random_range(1..=6))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0_f64, |acc, (x, y)| acc.max((x - y).abs()))
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
