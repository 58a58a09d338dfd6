//! Bounded FIFO of waypoint summaries with a latching full flag.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::GlobalSummary;

pub const DEFAULT_CAPACITY: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MemoryError {
    #[error("queue capacity must be at least 1")]
    ZeroCapacity,
    #[error("timestep {got} does not follow newest entry {newest}")]
    NonIncreasingTimestep { newest: u32, got: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MemoryQueue {
    capacity: usize,
    entries: VecDeque<GlobalSummary>,
    full: bool,
}

impl MemoryQueue {
    pub fn new(capacity: usize) -> Result<Self, MemoryError> {
        if capacity == 0 {
            return Err(MemoryError::ZeroCapacity);
        }
        Ok(Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
            full: false,
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.full
    }

    /// Appends `gs`, evicting and returning the oldest entry when at capacity.
    pub fn push(&mut self, gs: GlobalSummary) -> Result<Option<GlobalSummary>, MemoryError> {
        if let Some(newest) = self.entries.back() {
            if gs.timestep <= newest.timestep {
                return Err(MemoryError::NonIncreasingTimestep {
                    newest: newest.timestep,
                    got: gs.timestep,
                });
            }
        }
        let evicted = if self.entries.len() == self.capacity {
            self.entries.pop_front()
        } else {
            None
        };
        self.entries.push_back(gs);
        self.full = self.entries.len() == self.capacity;
        Ok(evicted)
    }

    /// Oldest-first copy of the entries.
    pub fn snapshot(&self) -> Vec<GlobalSummary> {
        self.entries.iter().cloned().collect()
    }
}
