//! Q-function approximators with a flat parameter vector and hand-written gradients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Which approximator to train.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum QFunctionKind {
    /// one parameter per `(s, a)` cell
    Tabular,
    /// one-hot state → `hidden` tanh units → one output per action
    Mlp { hidden: usize },
}

impl Default for QFunctionKind {
    fn default() -> Self {
        QFunctionKind::Tabular
    }
}

/// A Q-function over `n_states × n_actions` stored as one parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    kind: QFunctionKind,
    n_states: usize,
    n_actions: usize,
    params: Vec<f64>,
}

impl QNetwork {
    /// Tabular tables start at zero; MLP weights are Glorot-uniform from stream 1 of `seed`
    /// with zero biases.
    pub fn new(kind: QFunctionKind, n_states: usize, n_actions: usize, seed: u64) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::domain("network needs at least one state and one action"));
        }
        let params = match kind {
            QFunctionKind::Tabular => vec![0.0; n_states * n_actions],
            QFunctionKind::Mlp { hidden } => {
                if hidden == 0 {
                    return Err(Error::domain("hidden layer needs at least one unit"));
                }
                let mut r = rng::stream(seed, 1);
                let mut uniform = |fan_in: usize, fan_out: usize| {
                    let lim = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    lim * (2.0 * rng::open01(&mut r) - 1.0)
                };
                let mut p = Vec::with_capacity(hidden * (n_states + 1 + n_actions) + n_actions);
                p.extend((0..hidden * n_states).map(|_| uniform(n_states, hidden)));
                p.extend(std::iter::repeat(0.0).take(hidden));
                p.extend((0..n_actions * hidden).map(|_| uniform(hidden, n_actions)));
                p.extend(std::iter::repeat(0.0).take(n_actions));
                p
            }
        };
        Ok(Self { kind, n_states, n_actions, params })
    }

    pub fn kind(&self) -> QFunctionKind {
        self.kind
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    // MLP layout: W1 (hidden × n_states, column s contiguous), b1, W2 (n_actions × hidden), b2
    fn offsets(&self, hidden: usize) -> (usize, usize, usize) {
        let b1 = hidden * self.n_states;
        let w2 = b1 + hidden;
        (b1, w2, w2 + self.n_actions * hidden)
    }

    fn hidden(&self, hidden: usize, s: usize) -> Vec<f64> {
        let (b1, _, _) = self.offsets(hidden);
        let col = &self.params[s * hidden..(s + 1) * hidden];
        col.iter().zip(&self.params[b1..b1 + hidden]).map(|(w, b)| (w + b).tanh()).collect()
    }

    /// All action values of state `s`.
    pub fn values(&self, s: usize) -> Vec<f64> {
        match self.kind {
            QFunctionKind::Tabular => self.params[s * self.n_actions..(s + 1) * self.n_actions].to_vec(),
            QFunctionKind::Mlp { hidden } => {
                let h = self.hidden(hidden, s);
                let (_, w2, b2) = self.offsets(hidden);
                (0..self.n_actions)
                    .map(|a| {
                        let row = &self.params[w2 + a * hidden..w2 + (a + 1) * hidden];
                        row.iter().zip(&h).map(|(w, x)| w * x).sum::<f64>() + self.params[b2 + a]
                    })
                    .collect()
            }
        }
    }

    pub fn value(&self, s: usize, a: usize) -> f64 {
        match self.kind {
            QFunctionKind::Tabular => self.params[s * self.n_actions + a],
            QFunctionKind::Mlp { .. } => self.values(s)[a],
        }
    }

    /// `max_a Q(s, a)`; the terminal (`None`) is worth 0.
    pub fn max_value(&self, s: Option<usize>) -> f64 {
        s.map_or(0.0, |s| self.values(s).into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    pub fn greedy(&self, s: usize) -> usize {
        let v = self.values(s);
        let mut best = 0;
        for a in 1..v.len() {
            if v[a] > v[best] {
                best = a;
            }
        }
        best
    }

    /// `grad += g · ∂Q(s,a)/∂params`.
    pub fn accumulate_grad(&self, s: usize, a: usize, g: f64, grad: &mut [f64]) {
        match self.kind {
            QFunctionKind::Tabular => grad[s * self.n_actions + a] += g,
            QFunctionKind::Mlp { hidden } => {
                let h = self.hidden(hidden, s);
                let (b1, w2, b2) = self.offsets(hidden);
                let row = w2 + a * hidden;
                for j in 0..hidden {
                    grad[row + j] += g * h[j];
                    let dz = g * self.params[row + j] * (1.0 - h[j] * h[j]);
                    grad[s * hidden + j] += dz;
                    grad[b1 + j] += dz;
                }
                grad[b2 + a] += g;
            }
        }
    }

    /// `self ← τ·online + (1 − τ)·self`.
    pub fn polyak_from(&mut self, online: &QNetwork, tau: f64) {
        for (t, o) in self.params.iter_mut().zip(&online.params) {
            *t += tau * (o - *t);
        }
    }
}

/// Adam with the usual defaults (β₁ = 0.9, β₂ = 0.999, ε = 1e-8).
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step: i32,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self { lr, m: vec![0.0; n_params], v: vec![0.0; n_params], step: 0 }
    }

    /// One descent step along `grad`.
    pub fn update(&mut self, params: &mut [f64], grad: &[f64]) {
        const B1: f64 = 0.9;
        const B2: f64 = 0.999;
        self.step += 1;
        let c1 = 1.0 - B1.powi(self.step);
        let c2 = 1.0 - B2.powi(self.step);
        for i in 0..params.len() {
            self.m[i] = B1 * self.m[i] + (1.0 - B1) * grad[i];
            self.v[i] = B2 * self.v[i] + (1.0 - B2) * grad[i] * grad[i];
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}
