use std::collections::VecDeque;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};

/// Stored transition: input window, action taken, reward, following window.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub window: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_window: Vec<f64>,
}

/// FIFO experience replay with oldest-first eviction.
#[derive(Debug, Clone)]
pub struct ReplayMemory<T = Transition> {
    capacity: usize,
    buffer: VecDeque<T>,
}

impl<T> ReplayMemory<T> {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            buffer: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.buffer.iter()
    }

    pub fn store(&mut self, item: T) {
        if self.capacity == 0 {
            return;
        }
        if self.buffer.len() == self.capacity {
            self.buffer.pop_front();
        }
        self.buffer.push_back(item);
    }

    /// `k` distinct items drawn uniformly.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<&T>> {
        if k > self.buffer.len() {
            return Err(Error::InsufficientSamples {
                requested: k,
                available: self.buffer.len(),
            });
        }
        Ok(index::sample(rng, self.buffer.len(), k)
            .into_iter()
            .map(|i| &self.buffer[i])
            .collect())
    }
}
