use clap::Args;
use gemqp_core::harness::{make_synthetic_tasks, run_experiment, RunConfig, Strategy, TaskGenConfig};
use gemqp_core::Error;

use crate::{CliError, CommonArgs, RequestSettings};

#[derive(Args, Debug)]
pub struct DemoArgs {
    /// Number of tasks in the stream
    #[arg(long, default_value_t = 2)]
    tasks: usize,
    /// Input dimension
    #[arg(long, default_value_t = 4)]
    dim: usize,
    /// Training steps per task
    #[arg(long, default_value_t = 200)]
    steps: usize,
    /// Learning rate
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    /// Episodic memory capacity per task
    #[arg(long, default_value_t = 64)]
    memory: usize,
    /// Minibatch size
    #[arg(long, default_value_t = 8)]
    batch: usize,
    /// Pairwise cosine between task weight vectors is -conflict
    #[arg(long, default_value_t = 0.0)]
    conflict: f64,
    /// Examples generated per task
    #[arg(long, default_value_t = 200)]
    examples: usize,
    /// gem or sgd
    #[arg(long, default_value = "gem")]
    strategy: String,
}

pub fn run(args: &DemoArgs, common: &CommonArgs) -> Result<String, CliError> {
    let strategy: Strategy = args.strategy.parse()?;
    let seed = common.seed.unwrap_or(0);
    let tasks = make_synthetic_tasks(&TaskGenConfig {
        num_tasks: args.tasks,
        dim: args.dim,
        examples_per_task: args.examples,
        conflict: args.conflict,
        seed,
        ..Default::default()
    })?;
    let config = RunConfig {
        steps_per_task: args.steps,
        lr: args.lr,
        memory_capacity: args.memory,
        batch_size: args.batch,
        seed,
        projection: common.projection_config(&RequestSettings::default())?,
    };
    match run_experiment(&tasks, strategy, &config) {
        Ok(metrics) => Ok(metrics.to_csv_string()),
        Err(Error::NotConverged(_)) => Err(CliError::NotConverged(String::new())),
        Err(e) => Err(e.into()),
    }
}
