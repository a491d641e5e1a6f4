//! Synthetic linear-regression task streams with controlled conflict.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::Example;
use crate::error::{Error, Result};
use crate::linalg::{dot, norm2};

/// One regression task `y = wᵀx + ε`. `examples` doubles as the evaluation set.
#[derive(Debug, Clone, PartialEq)]
pub struct Task {
    pub id: usize,
    pub weights: Vec<f64>,
    pub examples: Vec<Example>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskGenConfig {
    pub num_tasks: usize,
    pub dim: usize,
    pub examples_per_task: usize,
    /// Pairwise cosine between task weight vectors is `−conflict`. Zero puts
    /// every task on its own block of features (inputs included).
    pub conflict: f64,
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for TaskGenConfig {
    fn default() -> Self {
        Self { num_tasks: 2, dim: 4, examples_per_task: 200, conflict: 0.0, noise_std: 0.01, seed: 0 }
    }
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Unit vectors with pairwise inner product `−conflict`, as rows of length
/// `rank`, via a semidefinite Cholesky of their Gram matrix.
fn equiangular_rows(n: usize, conflict: f64) -> Vec<Vec<f64>> {
    let gram = |i: usize, j: usize| if i == j { 1.0 } else { -conflict };
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        for i in j..n {
            let s = gram(i, j) - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                l[j][j] = if s > 1e-14 { s.sqrt() } else { 0.0 };
            } else {
                l[i][j] = if l[j][j] > 0.0 { s / l[j][j] } else { 0.0 };
            }
        }
    }
    let live: Vec<usize> = (0..n).filter(|&j| l[j][j] > 0.0).collect();
    l.iter().map(|row| live.iter().map(|&j| row[j]).collect()).collect()
}

/// Generates `num_tasks` regression tasks, ids starting at 1.
pub fn make_synthetic_tasks(cfg: &TaskGenConfig) -> Result<Vec<Task>> {
    let n = cfg.num_tasks;
    if n == 0 || cfg.dim == 0 || cfg.examples_per_task == 0 {
        return Err(Error::Parameter("num_tasks, dim and examples_per_task must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.conflict) {
        return Err(Error::Parameter(format!("conflict must lie in [0, 1], got {}", cfg.conflict)));
    }
    if !(cfg.noise_std >= 0.0 && cfg.noise_std.is_finite()) {
        return Err(Error::Parameter(format!("noise_std must be finite and >= 0, got {}", cfg.noise_std)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    // Per task: weights and the feature range inputs are drawn on.
    let (weights, supports): (Vec<Vec<f64>>, Vec<std::ops::Range<usize>>) = if cfg.conflict == 0.0 {
        if cfg.dim < 2 * n {
            return Err(Error::Parameter(format!(
                "disjoint supports for {n} tasks need dim >= {}, got {}",
                2 * n,
                cfg.dim
            )));
        }
        let block = cfg.dim / n;
        (0..n)
            .map(|t| {
                let support = t * block..(t + 1) * block;
                let mut w = vec![0.0; cfg.dim];
                for i in support.clone() {
                    w[i] = normal(&mut rng);
                }
                let norm = norm2(&w);
                w.iter_mut().for_each(|x| *x /= norm);
                (w, support)
            })
            .unzip()
    } else {
        if n >= 2 && cfg.conflict > 1.0 / (n - 1) as f64 {
            return Err(Error::Parameter(format!(
                "{n} unit vectors cannot have pairwise cosine -{} (limit -{})",
                cfg.conflict,
                1.0 / (n - 1) as f64
            )));
        }
        let rows = equiangular_rows(n, cfg.conflict);
        let rank = rows[0].len();
        if rank > cfg.dim {
            return Err(Error::Parameter(format!("conflict geometry needs dim >= {rank}, got {}", cfg.dim)));
        }
        // Random Householder reflection: preserves all inner products.
        let mut h: Vec<f64> = (0..cfg.dim).map(|_| normal(&mut rng)).collect();
        let hn = norm2(&h);
        h.iter_mut().for_each(|x| *x /= hn);
        rows.into_iter()
            .map(|r| {
                let mut w = vec![0.0; cfg.dim];
                w[..rank].copy_from_slice(&r);
                let s = 2.0 * dot(&h, &w);
                w.iter_mut().zip(&h).for_each(|(wi, hi)| *wi -= s * hi);
                (w, 0..cfg.dim)
            })
            .unzip()
    };

    let tasks = weights
        .into_iter()
        .zip(supports)
        .enumerate()
        .map(|(t, (w, support))| {
            let examples = (0..cfg.examples_per_task)
                .map(|_| {
                    let mut x = vec![0.0; cfg.dim];
                    for i in support.clone() {
                        x[i] = normal(&mut rng);
                    }
                    let y = dot(&w, &x) + cfg.noise_std * normal(&mut rng);
                    Example { x, y, task_id: t + 1 }
                })
                .collect();
            Task { id: t + 1, weights: w, examples }
        })
        .collect();
    Ok(tasks)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cosine(a: &[f64], b: &[f64]) -> f64 {
        dot(a, b) / (norm2(a) * norm2(b))
    }

    fn cfg(num_tasks: usize, dim: usize, conflict: f64) -> TaskGenConfig {
        TaskGenConfig { num_tasks, dim, examples_per_task: 8, conflict, ..Default::default() }
    }

    #[test]
    fn zero_conflict_gives_disjoint_supports() {
        let tasks = make_synthetic_tasks(&cfg(2, 4, 0.0)).unwrap();
        assert_eq!(dot(&tasks[0].weights, &tasks[1].weights), 0.0);
        for e in &tasks[0].examples {
            assert_eq!(&e.x[2..], &[0.0, 0.0]);
        }
        assert!(tasks[1].examples.iter().all(|e| e.task_id == 2));
    }

    #[test]
    fn full_conflict_is_antipodal() {
        let tasks = make_synthetic_tasks(&cfg(2, 4, 1.0)).unwrap();
        let neg: Vec<f64> = tasks[0].weights.iter().map(|x| -x).collect();
        assert_eq!(tasks[1].weights, neg);
    }

    #[test]
    fn half_conflict_cosines() {
        for n in [2, 3] {
            let tasks = make_synthetic_tasks(&cfg(n, 5, 0.5)).unwrap();
            for i in 0..n {
                assert!((norm2(&tasks[i].weights) - 1.0).abs() < 1e-12);
                for j in 0..i {
                    assert!((cosine(&tasks[i].weights, &tasks[j].weights) + 0.5).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn infeasible_geometry_is_rejected() {
        assert!(make_synthetic_tasks(&cfg(3, 5, 0.0)).is_err());
        assert!(make_synthetic_tasks(&cfg(3, 6, 0.8)).is_err());
        assert!(make_synthetic_tasks(&cfg(4, 3, 0.2)).is_err());
        assert!(make_synthetic_tasks(&cfg(2, 4, 1.5)).is_err());
    }

    #[test]
    fn generation_is_seeded() {
        let a = make_synthetic_tasks(&cfg(2, 4, 1.0)).unwrap();
        let b = make_synthetic_tasks(&cfg(2, 4, 1.0)).unwrap();
        assert_eq!(a, b);
        let c = make_synthetic_tasks(&TaskGenConfig { seed: 9, ..cfg(2, 4, 1.0) }).unwrap();
        assert_ne!(a, c);
    }
}
