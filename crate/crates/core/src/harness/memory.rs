use std::collections::{BTreeMap, VecDeque};

use super::Example;
use crate::error::{Error, Result};

/// Per-task ring buffers of observed examples. When a task's buffer is full
/// the oldest example is overwritten.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodicMemory {
    capacity_per_task: usize,
    buffers: BTreeMap<usize, VecDeque<Example>>,
}

impl EpisodicMemory {
    pub fn new(capacity_per_task: usize) -> Result<Self> {
        if capacity_per_task == 0 {
            return Err(Error::Parameter("memory capacity must be at least 1".into()));
        }
        Ok(Self { capacity_per_task, buffers: BTreeMap::new() })
    }

    pub fn capacity_per_task(&self) -> usize {
        self.capacity_per_task
    }

    pub fn insert(&mut self, example: Example) {
        let buf = self
            .buffers
            .entry(example.task_id)
            .or_insert_with(|| VecDeque::with_capacity(self.capacity_per_task));
        if buf.len() == self.capacity_per_task {
            buf.pop_front();
        }
        buf.push_back(example);
    }

    pub fn extend<'a>(&mut self, examples: impl IntoIterator<Item = &'a Example>) {
        for e in examples {
            self.insert(e.clone());
        }
    }

    /// Stored examples of one task, oldest first.
    pub fn buffer(&self, task_id: usize) -> Option<&VecDeque<Example>> {
        self.buffers.get(&task_id)
    }

    /// Non-empty buffers of tasks strictly before `task_id`, in task order.
    pub fn earlier_tasks(&self, task_id: usize) -> impl Iterator<Item = (usize, &VecDeque<Example>)> {
        self.buffers.range(..task_id).filter(|(_, b)| !b.is_empty()).map(|(&k, b)| (k, b))
    }

    pub fn len(&self, task_id: usize) -> usize {
        self.buffers.get(&task_id).map_or(0, VecDeque::len)
    }

    pub fn is_empty(&self) -> bool {
        self.buffers.values().all(VecDeque::is_empty)
    }
}
