//! Single-layer LSTM with a dense head producing one Q-value per action.
//!
//! Parameters live in one flat vector:
//!
//! | block        | shape              | notes                              |
//! |--------------|--------------------|------------------------------------|
//! | gate weights | `4H x (I + H)`     | rows: input, forget, output, cell  |
//! | gate bias    | `4H`               |                                    |
//! | head weights | `A x H`            |                                    |
//! | head bias    | `A`                |                                    |
//!
//! Columns of the gate weights take the step input first, then the previous
//! hidden state.

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LstmQNet {
    input_dim: usize,
    hidden_dim: usize,
    n_actions: usize,
    params: Vec<f64>,
}

/// Per-step activations kept for backpropagation through time.
struct Trace {
    /// `[x_t; h_{t-1}]` per step.
    concat: Vec<f64>,
    /// Gate activations `[i, f, o, g]` per step.
    gates: Vec<f64>,
    /// Cell state per step, with the zero initial state at index 0.
    cells: Vec<f64>,
    h_last: Vec<f64>,
    steps: usize,
}

impl LstmQNet {
    pub fn param_count(input_dim: usize, hidden_dim: usize, n_actions: usize) -> usize {
        4 * hidden_dim * (input_dim + hidden_dim) + 4 * hidden_dim + n_actions * hidden_dim + n_actions
    }

    fn check_dims(input_dim: usize, hidden_dim: usize, n_actions: usize) -> Result<()> {
        for (what, v) in [("input_dim", input_dim), ("hidden_dim", hidden_dim), ("n_actions", n_actions)] {
            if v == 0 {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: 1,
                    got: 0,
                });
            }
        }
        Ok(())
    }

    pub fn zeros(input_dim: usize, hidden_dim: usize, n_actions: usize) -> Result<Self> {
        Self::check_dims(input_dim, hidden_dim, n_actions)?;
        Ok(Self {
            input_dim,
            hidden_dim,
            n_actions,
            params: vec![0.0; Self::param_count(input_dim, hidden_dim, n_actions)],
        })
    }

    /// Uniform `[-1/sqrt(H), 1/sqrt(H)]` everywhere, forget-gate bias 1.
    pub fn init<R: Rng + ?Sized>(input_dim: usize, hidden_dim: usize, n_actions: usize, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(input_dim, hidden_dim, n_actions)?;
        let bound = 1.0 / (hidden_dim as f64).sqrt();
        for p in &mut net.params {
            *p = rng.random_range(-bound..=bound);
        }
        let (fb, h) = (net.gate_bias_offset() + hidden_dim, hidden_dim);
        net.params[fb..fb + h].fill(1.0);
        Ok(net)
    }

    pub fn from_params(input_dim: usize, hidden_dim: usize, n_actions: usize, params: Vec<f64>) -> Result<Self> {
        Self::check_dims(input_dim, hidden_dim, n_actions)?;
        let expected = Self::param_count(input_dim, hidden_dim, n_actions);
        if params.len() != expected {
            return Err(Error::DimensionMismatch {
                what: "parameter vector",
                expected,
                got: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Checkpoint("non-finite parameter".into()));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            n_actions,
            params,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn cols(&self) -> usize {
        self.input_dim + self.hidden_dim
    }

    fn gate_bias_offset(&self) -> usize {
        4 * self.hidden_dim * self.cols()
    }

    fn head_offset(&self) -> usize {
        self.gate_bias_offset() + 4 * self.hidden_dim
    }

    fn head_bias_offset(&self) -> usize {
        self.head_offset() + self.n_actions * self.hidden_dim
    }

    fn steps_of(&self, window: &[f64]) -> Result<usize> {
        if window.is_empty() || window.len() % self.input_dim != 0 {
            return Err(Error::DimensionMismatch {
                what: "state window",
                expected: self.input_dim,
                got: window.len(),
            });
        }
        Ok(window.len() / self.input_dim)
    }

    fn run(&self, window: &[f64], steps: usize, keep: bool) -> Trace {
        let (n_in, h, cols) = (self.input_dim, self.hidden_dim, self.cols());
        let w = &self.params[..self.gate_bias_offset()];
        let b = &self.params[self.gate_bias_offset()..self.head_offset()];
        let stored = if keep { steps } else { 1 };
        let mut tr = Trace {
            concat: vec![0.0; stored * cols],
            gates: vec![0.0; stored * 4 * h],
            cells: vec![0.0; (stored + 1) * h],
            h_last: vec![0.0; h],
            steps,
        };
        let mut hidden = vec![0.0; h];
        let mut cell = vec![0.0; h];
        let mut z = vec![0.0; 4 * h];
        for t in 0..steps {
            let slot = if keep { t } else { 0 };
            let v = &mut tr.concat[slot * cols..(slot + 1) * cols];
            v[..n_in].copy_from_slice(&window[t * n_in..(t + 1) * n_in]);
            v[n_in..].copy_from_slice(&hidden);
            for (r, zr) in z.iter_mut().enumerate() {
                *zr = b[r] + dot(&w[r * cols..(r + 1) * cols], v);
            }
            let g = &mut tr.gates[slot * 4 * h..(slot + 1) * 4 * h];
            for k in 0..3 * h {
                g[k] = sigmoid(z[k]);
            }
            for k in 3 * h..4 * h {
                g[k] = z[k].tanh();
            }
            for j in 0..h {
                let (i_g, f_g, o_g, c_g) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                cell[j] = f_g * cell[j] + i_g * c_g;
                hidden[j] = o_g * cell[j].tanh();
            }
            tr.cells[(slot + 1) * h..(slot + 2) * h].copy_from_slice(&cell);
        }
        tr.h_last = hidden;
        tr
    }

    fn head(&self, hidden: &[f64], out: &mut [f64]) {
        let h = self.hidden_dim;
        let hw = &self.params[self.head_offset()..self.head_bias_offset()];
        let hb = &self.params[self.head_bias_offset()..];
        for (a, q) in out.iter_mut().enumerate() {
            *q = hb[a] + dot(&hw[a * h..(a + 1) * h], hidden);
        }
    }

    /// Q-values of every action for a flattened window of `W * input_dim`
    /// features, run from zero hidden and cell state.
    pub fn forward(&self, window: &[f64]) -> Result<Vec<f64>> {
        let steps = self.steps_of(window)?;
        let tr = self.run(window, steps, false);
        let mut q = vec![0.0; self.n_actions];
        self.head(&tr.h_last, &mut q);
        Ok(q)
    }

    /// Adds `dq * dQ[action]/dparams` into `grad`.
    fn backward(&self, tr: &Trace, action: usize, dq: f64, grad: &mut [f64]) {
        let (h, cols) = (self.hidden_dim, self.cols());
        let n_in = self.input_dim;
        let (gb, ho, hbo) = (self.gate_bias_offset(), self.head_offset(), self.head_bias_offset());

        axpy(dq, &tr.h_last, &mut grad[ho + action * h..ho + (action + 1) * h]);
        grad[hbo + action] += dq;

        let mut dh = vec![0.0; h];
        axpy(dq, &self.params[ho + action * h..ho + (action + 1) * h], &mut dh);
        let mut dc = vec![0.0; h];
        let mut dz = vec![0.0; 4 * h];

        for t in (0..tr.steps).rev() {
            let g = &tr.gates[t * 4 * h..(t + 1) * 4 * h];
            let c_prev = &tr.cells[t * h..(t + 1) * h];
            let c_cur = &tr.cells[(t + 1) * h..(t + 2) * h];
            for j in 0..h {
                let (i_g, f_g, o_g, c_g) = (g[j], g[h + j], g[2 * h + j], g[3 * h + j]);
                let tc = c_cur[j].tanh();
                let d_o = dh[j] * tc;
                dc[j] += dh[j] * o_g * (1.0 - tc * tc);
                dz[j] = dc[j] * c_g * i_g * (1.0 - i_g);
                dz[h + j] = dc[j] * c_prev[j] * f_g * (1.0 - f_g);
                dz[2 * h + j] = d_o * o_g * (1.0 - o_g);
                dz[3 * h + j] = dc[j] * i_g * (1.0 - c_g * c_g);
                dc[j] *= f_g;
            }
            let v = &tr.concat[t * cols..(t + 1) * cols];
            dh.fill(0.0);
            for (r, &dzr) in dz.iter().enumerate() {
                if dzr == 0.0 {
                    continue;
                }
                axpy(dzr, v, &mut grad[r * cols..(r + 1) * cols]);
                grad[gb + r] += dzr;
                axpy(dzr, &self.params[r * cols + n_in..(r + 1) * cols], &mut dh);
            }
        }
    }

    /// Mean squared error of `Q(window)[action]` against fixed targets and
    /// its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, items: &[(&[f64], usize, f64)]) -> Result<(f64, Vec<f64>)> {
        if items.is_empty() {
            return Err(Error::EmptyMinibatch);
        }
        let n = items.len() as f64;
        let mut grad = vec![0.0; self.params.len()];
        let mut loss = 0.0;
        let mut q = vec![0.0; self.n_actions];
        for &(window, action, target) in items {
            if action >= self.n_actions {
                return Err(Error::DimensionMismatch {
                    what: "action index",
                    expected: self.n_actions,
                    got: action,
                });
            }
            let steps = self.steps_of(window)?;
            let tr = self.run(window, steps, true);
            self.head(&tr.h_last, &mut q);
            let err = q[action] - target;
            loss += err * err;
            let dq = 2.0 * err / n;
            if dq != 0.0 {
                self.backward(&tr, action, dq, &mut grad);
            }
        }
        Ok((loss / n, grad))
    }

    /// Flattened checkpoint: three little-endian `u32` dimensions (input,
    /// hidden, actions) followed by every parameter as a little-endian `f64`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 8 * self.params.len());
        for d in [self.input_dim, self.hidden_dim, self.n_actions] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for p in &self.params {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 12 {
            return Err(Error::Checkpoint(format!("{} bytes is shorter than the header", bytes.len())));
        }
        let dim = |i: usize| u32::from_le_bytes(bytes[4 * i..4 * i + 4].try_into().expect("4 bytes")) as usize;
        let (input_dim, hidden_dim, n_actions) = (dim(0), dim(1), dim(2));
        let body = &bytes[12..];
        let expected = Self::param_count(input_dim, hidden_dim, n_actions);
        if body.len() != 8 * expected {
            return Err(Error::Checkpoint(format!(
                "expected {expected} parameters for dims ({input_dim}, {hidden_dim}, {n_actions}), found {} bytes",
                body.len()
            )));
        }
        let params = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Self::from_params(input_dim, hidden_dim, n_actions, params)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::File::create(path)
            .and_then(|mut f| f.write_all(&self.to_bytes()))
            .map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut bytes = Vec::new();
        std::fs::File::open(path)
            .and_then(|mut f| f.read_to_end(&mut bytes))
            .map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}
