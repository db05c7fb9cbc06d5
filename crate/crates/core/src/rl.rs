//! Tabular Q-learning primitives shared by the learning schedulers.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One decision step as seen by a learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Experience {
    pub s: usize,
    pub a: usize,
    pub rc: f64,
    pub s_next: usize,
}

/// Learning section of the run config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Exploration probability at subframe 0.
    pub epsilon: f64,
    /// Multiplicative decay applied once per subframe.
    pub epsilon_decay: f64,
    pub epsilon_floor: f64,
    pub target_delay_ms: f64,
    /// Sigmoid steepness in 1/ms.
    pub beta: f64,
    /// Subframes in the trailing average-delay window.
    pub delay_window: usize,
}

impl Default for LearnParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            gamma: 0.9,
            epsilon: 0.9,
            epsilon_decay: 0.995,
            epsilon_floor: 0.05,
            target_delay_ms: 10.0,
            beta: 0.5,
            delay_window: 50,
        }
    }
}

impl LearnParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::range("learning.alpha", format!("must lie in (0, 1], got {}", self.alpha)));
        }
        if !(self.gamma >= 0.0 && self.gamma < 1.0) {
            return Err(Error::range("learning.gamma", format!("must lie in [0, 1), got {}", self.gamma)));
        }
        for (field, v) in [
            ("learning.epsilon", self.epsilon),
            ("learning.epsilon_floor", self.epsilon_floor),
            ("learning.epsilon_decay", self.epsilon_decay),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::range(field, format!("must lie in [0, 1], got {v}")));
            }
        }
        if !(self.target_delay_ms.is_finite() && self.target_delay_ms >= 0.0) {
            return Err(Error::range("learning.target_delay_ms", "must be non-negative"));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::range("learning.beta", "must be positive"));
        }
        if self.delay_window == 0 {
            return Err(Error::range("learning.delay_window", "must be at least 1"));
        }
        Ok(())
    }

    /// Exploration probability after `subframe` decay steps.
    pub fn epsilon_at(&self, subframe: u64) -> f64 {
        let decayed = self.epsilon * self.epsilon_decay.powf(subframe as f64);
        decayed.max(self.epsilon_floor.min(self.epsilon))
    }
}

/// Dense Q-table; unvisited pairs read as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct QTable {
    n_actions: usize,
    values: Vec<f64>,
}

impl QTable {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_actions,
            values: vec![0.0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.values.len() / self.n_actions.max(1)
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: usize, a: usize) -> f64 {
        self.values[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, v: f64) {
        self.values[s * self.n_actions + a] = v;
    }

    pub fn row(&self, s: usize) -> &[f64] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn max(&self, s: usize) -> f64 {
        self.row(s).iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// `Q(s,a) <- (1-alpha) Q(s,a) + alpha (rc + gamma max_a' Q(s',a'))`.
pub fn q_update(table: &mut QTable, e: &Experience, p: &LearnParams) -> f64 {
    let target = e.rc + p.gamma * table.max(e.s_next);
    let v = (1.0 - p.alpha) * table.get(e.s, e.a) + p.alpha * target;
    table.set(e.s, e.a, v);
    v
}

/// Index of the largest value, lowest index on ties.
pub fn argmax(values: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in values.iter().enumerate() {
        match best {
            Some((_, b)) if b >= v => {}
            _ => best = Some((i, v)),
        }
    }
    best.map(|(i, _)| i)
}

pub fn epsilon_greedy<R: Rng + ?Sized>(qvalues: &[f64], epsilon: f64, rng: &mut R) -> Result<usize> {
    if qvalues.is_empty() {
        return Err(Error::EmptyActionSet);
    }
    if rng.random::<f64>() < epsilon {
        Ok(rng.random_range(0..qvalues.len()))
    } else {
        Ok(argmax(qvalues).expect("non-empty"))
    }
}

/// 0 while the average delay is below target, 1 otherwise.
pub fn delay_state(avg_delay_ms: f64, target_ms: f64) -> usize {
    if avg_delay_ms < target_ms {
        0
    } else {
        1
    }
}

/// Decreasing sigmoid of the total delay, 0.5 at the target.
pub fn reward_sigmoid(total_delay_ms: f64, p: &LearnParams) -> f64 {
    let z = p.beta * (total_delay_ms - p.target_delay_ms);
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Trailing mean of completed-packet delays over the last `window` subframes.
#[derive(Debug, Clone)]
pub struct DelayWindow {
    window: usize,
    slots: VecDeque<(f64, u64)>,
    sum: f64,
    count: u64,
}

impl DelayWindow {
    pub fn new(window: usize) -> Self {
        Self {
            window: window.max(1),
            slots: VecDeque::with_capacity(window + 1),
            sum: 0.0,
            count: 0,
        }
    }

    /// Closes one subframe with the given completed delays.
    pub fn push_subframe(&mut self, delays_ms: impl IntoIterator<Item = f64>) {
        let (mut s, mut c) = (0.0, 0);
        for d in delays_ms {
            s += d;
            c += 1;
        }
        self.slots.push_back((s, c));
        self.sum += s;
        self.count += c;
        if self.slots.len() > self.window {
            let (os, oc) = self.slots.pop_front().expect("non-empty");
            self.sum -= os;
            self.count -= oc;
        }
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            // Recompute rather than trust the running float sum.
            self.slots.iter().map(|s| s.0).sum::<f64>() / self.count as f64
        }
    }
}
