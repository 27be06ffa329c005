//! Uniform experience replay.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng;

/// One environment step. `s_next = None` means the episode ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub s: usize,
    pub a: usize,
    pub r: f64,
    pub s_next: Option<usize>,
}

impl Transition {
    pub fn terminal(&self) -> bool {
        self.s_next.is_none()
    }
}

/// Ring buffer of transitions, sampled uniformly with replacement.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: Vec<Transition>,
    capacity: usize,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { items: Vec::with_capacity(capacity.min(1 << 16)), capacity: capacity.max(1), head: 0 }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.head] = t;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn sample<R: Rng>(&self, n: usize, r: &mut R) -> Vec<Transition> {
        (0..n).map(|_| self.items[rng::index(r, self.items.len())]).collect()
    }
}
