//! Desk-scale continual-learning testbed.
//!
//! Linear models `f_θ(x) = θᵀx` with squared error `½(θᵀx − y)²` are trained
//! on a sequence of regression tasks. The GEM strategy computes the loss
//! gradient on each earlier task's episodic memory and projects the
//! proposed update so that none of those losses increases to first order.

mod memory;
mod run;
mod tasks;

pub use memory::EpisodicMemory;
pub use run::{run_experiment, run_experiment_observed, RunConfig, RunMetrics, StepRecord, Strategy};
pub use tasks::{make_synthetic_tasks, Task, TaskGenConfig};

use crate::error::{check_len, Error, Result};
use crate::gem::{project, GradientSet, ProjectionConfig};
use crate::linalg::dot;

#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub x: Vec<f64>,
    pub y: f64,
    /// 1-based task index.
    pub task_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub theta: Vec<f64>,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self { theta: vec![0.0; dim] }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        dot(&self.theta, x)
    }

    /// Mean of `½(θᵀx − y)²`.
    pub fn loss<'a>(&self, examples: impl IntoIterator<Item = &'a Example>) -> Result<f64> {
        let mut sum = 0.0;
        let mut n = 0usize;
        for e in examples {
            check_len("example features", self.theta.len(), e.x.len())?;
            let r = self.predict(&e.x) - e.y;
            sum += 0.5 * r * r;
            n += 1;
        }
        if n == 0 {
            return Err(Error::Precondition("loss over an empty example set".into()));
        }
        Ok(sum / n as f64)
    }

    fn step(&self, direction: &[f64], lr: f64) -> LinearModel {
        LinearModel { theta: self.theta.iter().zip(direction).map(|(t, d)| t - lr * d).collect() }
    }
}

/// Gradient of the mean squared-error loss, `(1/|M|)·Σ (θᵀx − y)x`,
/// accumulated in iteration order.
pub fn task_gradient<'a>(model: &LinearModel, examples: impl IntoIterator<Item = &'a Example>) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; model.theta.len()];
    let mut n = 0usize;
    for e in examples {
        check_len("example features", model.theta.len(), e.x.len())?;
        let r = model.predict(&e.x) - e.y;
        for (gi, xi) in grad.iter_mut().zip(&e.x) {
            *gi += r * xi;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::Precondition("gradient over an empty memory".into()));
    }
    let n = n as f64;
    grad.iter_mut().for_each(|g| *g /= n);
    Ok(grad)
}

fn check_lr(lr: f64) -> Result<()> {
    if lr > 0.0 && lr.is_finite() {
        Ok(())
    } else {
        Err(Error::Parameter(format!("learning rate must be positive and finite, got {lr}")))
    }
}

/// `θ' = θ − lr·g` with `g` the batch gradient.
pub fn sgd_step(model: &LinearModel, batch: &[Example], lr: f64) -> Result<LinearModel> {
    check_lr(lr)?;
    let g = task_gradient(model, batch)?;
    Ok(model.step(&g, lr))
}

/// What one GEM update saw and did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    pub g: Vec<f64>,
    pub g_tilde: Vec<f64>,
    /// `(task_id, g_k)` for every earlier task with a non-empty memory.
    pub memory_grads: Vec<(usize, Vec<f64>)>,
    /// Earlier task ids whose constraint `g` violated.
    pub violated_tasks: Vec<usize>,
    pub projected: bool,
    pub kkt_residual: f64,
}

impl StepDiagnostics {
    pub fn violations(&self) -> usize {
        self.violated_tasks.len()
    }
}

fn memory_gradients(model: &LinearModel, memory: &EpisodicMemory, task_id: usize) -> Result<Vec<(usize, Vec<f64>)>> {
    memory
        .earlier_tasks(task_id)
        .map(|(k, buf)| Ok((k, task_gradient(model, buf)?)))
        .collect()
}

/// One GEM update on `batch` (from task `task_id`) against the memories of
/// all earlier tasks.
pub fn gem_step(
    model: &LinearModel,
    batch: &[Example],
    task_id: usize,
    memory: &EpisodicMemory,
    lr: f64,
    config: &ProjectionConfig,
) -> Result<(LinearModel, StepDiagnostics)> {
    check_lr(lr)?;
    let g = task_gradient(model, batch)?;
    let memory_grads = memory_gradients(model, memory, task_id)?;
    let gs = GradientSet::new(g, memory_grads.iter().map(|(_, gk)| gk.clone()).collect())?;
    let proj = project(&gs, config)?;
    let next = model.step(&proj.g_tilde, lr);
    let diag = StepDiagnostics {
        violated_tasks: proj.violated.iter().map(|&i| memory_grads[i].0).collect(),
        g: gs.g().to_vec(),
        g_tilde: proj.g_tilde,
        memory_grads,
        projected: proj.projected,
        kkt_residual: proj.kkt_residual,
    };
    Ok((next, diag))
}
