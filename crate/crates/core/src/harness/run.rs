use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{gem_step, memory_gradients, sgd_step, EpisodicMemory, Example, LinearModel, StepDiagnostics, Task};
use crate::error::{Error, Result};
use crate::gem::{check_constraints, GradientSet, ProjectionConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Gem,
    Sgd,
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gem" => Ok(Strategy::Gem),
            "sgd" => Ok(Strategy::Sgd),
            other => Err(Error::Parameter(format!("unknown strategy {other:?} (expected gem or sgd)"))),
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Gem => "gem",
            Strategy::Sgd => "sgd",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub steps_per_task: usize,
    pub lr: f64,
    pub memory_capacity: usize,
    pub batch_size: usize,
    /// Seeds the order in which each task's examples are visited.
    pub seed: u64,
    pub projection: ProjectionConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            steps_per_task: 200,
            lr: 1e-3,
            memory_capacity: 64,
            batch_size: 8,
            seed: 0,
            projection: ProjectionConfig::default(),
        }
    }
}

impl RunConfig {
    fn validate(&self) -> Result<()> {
        if self.steps_per_task == 0 || self.batch_size == 0 {
            return Err(Error::Parameter("steps_per_task and batch_size must be positive".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Parameter(format!("learning rate must be positive and finite, got {}", self.lr)));
        }
        EpisodicMemory::new(self.memory_capacity)?;
        self.projection.validate()
    }
}

/// Loss table and constraint statistics of one run. Steps are global and
/// 1-based; tasks follow the order of the task stream.
#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub task_ids: Vec<usize>,
    /// `per_step_task_losses[step][task]`: mean loss on the task's full
    /// example set after the step.
    pub per_step_task_losses: Vec<Vec<f64>>,
    /// Earlier-task constraints violated by the proposed update at each step.
    pub violation_counts: Vec<usize>,
    pub projection_counts: usize,
}

impl RunMetrics {
    pub fn steps(&self) -> usize {
        self.per_step_task_losses.len()
    }

    pub fn final_losses(&self) -> Option<&[f64]> {
        self.per_step_task_losses.last().map(Vec::as_slice)
    }

    /// CSV with header `step,task,loss,violations`, one row per (step, task).
    /// Floats use the shortest representation that parses back exactly.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "step,task,loss,violations")?;
        for (s, (losses, violations)) in self.per_step_task_losses.iter().zip(&self.violation_counts).enumerate() {
            for (task, loss) in self.task_ids.iter().zip(losses) {
                writeln!(out, "{},{},{},{}", s + 1, task, loss, violations)?;
            }
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("CSV is ASCII")
    }
}

/// Passed to the observer of [`run_experiment_observed`] after every step.
#[derive(Debug)]
pub struct StepRecord<'a> {
    pub step: usize,
    pub task_id: usize,
    pub model: &'a LinearModel,
    /// Present for GEM steps only.
    pub diagnostics: Option<&'a StepDiagnostics>,
}

pub fn run_experiment(tasks: &[Task], strategy: Strategy, config: &RunConfig) -> Result<RunMetrics> {
    run_experiment_observed(tasks, strategy, config, |_| {})
}

/// Trains one linear model over the task stream in order. Every batch is
/// inserted into the episodic memory of its task after the update.
pub fn run_experiment_observed<F>(
    tasks: &[Task],
    strategy: Strategy,
    config: &RunConfig,
    mut observer: F,
) -> Result<RunMetrics>
where
    F: FnMut(&StepRecord<'_>),
{
    config.validate()?;
    let dim = tasks
        .first()
        .and_then(|t| t.examples.first())
        .map(|e| e.x.len())
        .ok_or_else(|| Error::Parameter("task stream must contain at least one example".into()))?;
    if let Some(t) = tasks.iter().find(|t| t.examples.is_empty()) {
        return Err(Error::Parameter(format!("task {} has no examples", t.id)));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = LinearModel::zeros(dim);
    let mut memory = EpisodicMemory::new(config.memory_capacity)?;
    let mut metrics = RunMetrics {
        task_ids: tasks.iter().map(|t| t.id).collect(),
        per_step_task_losses: Vec::with_capacity(tasks.len() * config.steps_per_task),
        violation_counts: Vec::with_capacity(tasks.len() * config.steps_per_task),
        projection_counts: 0,
    };

    let mut step = 0;
    for task in tasks {
        let mut order: Vec<usize> = (0..task.examples.len()).collect();
        order.shuffle(&mut rng);
        let mut cursor = 0;
        for _ in 0..config.steps_per_task {
            let batch: Vec<Example> = (0..config.batch_size)
                .map(|i| task.examples[order[(cursor + i) % order.len()]].clone())
                .collect();
            cursor = (cursor + config.batch_size) % order.len();
            step += 1;

            let (next, diag) = match strategy {
                Strategy::Gem => {
                    let (next, diag) = gem_step(&model, &batch, task.id, &memory, config.lr, &config.projection)?;
                    (next, Some(diag))
                }
                Strategy::Sgd => (sgd_step(&model, &batch, config.lr)?, None),
            };
            let violations = match &diag {
                Some(d) => d.violations(),
                None => sgd_violations(&model, &batch, task.id, &memory, &config.projection)?,
            };
            if diag.as_ref().is_some_and(|d| d.projected) {
                metrics.projection_counts += 1;
            }
            model = next;
            memory.extend(&batch);

            let losses = tasks.iter().map(|t| model.loss(&t.examples)).collect::<Result<Vec<_>>>()?;
            metrics.per_step_task_losses.push(losses);
            metrics.violation_counts.push(violations);
            observer(&StepRecord { step, task_id: task.id, model: &model, diagnostics: diag.as_ref() });
        }
    }
    Ok(metrics)
}

/// Constraints the plain SGD update would have violated, for reporting.
fn sgd_violations(
    model: &LinearModel,
    batch: &[Example],
    task_id: usize,
    memory: &EpisodicMemory,
    config: &ProjectionConfig,
) -> Result<usize> {
    let grads = memory_gradients(model, memory, task_id)?;
    if grads.is_empty() {
        return Ok(0);
    }
    let g = super::task_gradient(model, batch)?;
    let gs = GradientSet::new(g, grads.into_iter().map(|(_, gk)| gk).collect())?;
    Ok(check_constraints(&gs, config.violation_tol).len())
}
