//! Deep Q-learning: replay memory, LSTM Q-network and the TD trainer.

mod lstm;
mod replay;

pub use lstm::LstmQNet;
pub use replay::{ReplayMemory, Transition};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rl::LearnParams;

/// DQN section of the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DqnConfig {
    /// Subframes of history fed to the LSTM.
    pub window: usize,
    pub hidden: usize,
    pub replay_capacity: usize,
    pub batch: usize,
    pub lr: f64,
    /// Queue backlog that maps to feature value 1.
    pub backlog_scale_bits: f64,
}

impl Default for DqnConfig {
    fn default() -> Self {
        Self {
            window: 10,
            hidden: 32,
            replay_capacity: 10_000,
            batch: 32,
            lr: 1e-3,
            backlog_scale_bits: 32_768.0,
        }
    }
}

impl DqnConfig {
    pub(crate) fn validate(&self) -> Result<()> {
        for (field, v) in [
            ("dqn.window", self.window),
            ("dqn.hidden", self.hidden),
            ("dqn.batch", self.batch),
        ] {
            if v == 0 {
                return Err(Error::range(field, "must be at least 1"));
            }
        }
        if self.replay_capacity < self.batch {
            return Err(Error::range(
                "dqn.replay_capacity",
                format!("must hold at least one minibatch ({})", self.batch),
            ));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::range("dqn.lr", "must be non-negative"));
        }
        if !(self.backlog_scale_bits.is_finite() && self.backlog_scale_bits > 0.0) {
            return Err(Error::range("dqn.backlog_scale_bits", "must be positive"));
        }
        Ok(())
    }
}

/// Sliding window of the last `len` feature vectors, oldest first,
/// zero-padded until filled.
#[derive(Debug, Clone, PartialEq)]
pub struct StateWindow {
    dim: usize,
    data: Vec<f64>,
}

impl StateWindow {
    pub fn new(dim: usize, len: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * len],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn push(&mut self, features: &[f64]) -> Result<()> {
        if features.len() != self.dim {
            return Err(Error::DimensionMismatch {
                what: "feature vector",
                expected: self.dim,
                got: features.len(),
            });
        }
        if self.data.is_empty() {
            return Ok(());
        }
        self.data.copy_within(self.dim.., 0);
        let n = self.data.len();
        self.data[n - self.dim..].copy_from_slice(features);
        Ok(())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// One SGD step on the mean squared TD error of a minibatch. Targets use the
/// current parameters and are held constant. Returns the loss before the
/// update.
pub fn train_step(net: &mut LstmQNet, minibatch: &[&Transition], p: &LearnParams, lr: f64) -> Result<f64> {
    if minibatch.is_empty() {
        return Err(Error::EmptyMinibatch);
    }
    let mut targets = Vec::with_capacity(minibatch.len());
    for t in minibatch {
        let next = net.forward(&t.next_window)?;
        let best = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        targets.push(t.reward + p.gamma * best);
    }
    let items: Vec<(&[f64], usize, f64)> = minibatch
        .iter()
        .zip(&targets)
        .map(|(t, &y)| (t.window.as_slice(), t.action, y))
        .collect();
    let (loss, grad) = net.loss_and_gradient(&items)?;
    if lr > 0.0 {
        for (w, g) in net.params_mut().iter_mut().zip(&grad) {
            *w -= lr * g;
        }
    }
    Ok(loss)
}
