use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::Scalar;

/// Dense action-value table with per-pair visit counts. Unvisited pairs read
/// as zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct QTable<T> {
    n_states: usize,
    n_actions: usize,
    values: Vec<T>,
    visits: Vec<u64>,
}

impl<T: Scalar> QTable<T> {
    pub fn new(n_states: usize, n_actions: usize) -> Self {
        Self {
            n_states,
            n_actions,
            values: vec![T::zero(); n_states * n_actions],
            visits: vec![0; n_states * n_actions],
        }
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, s: usize, a: usize) -> T {
        self.values[s * self.n_actions + a]
    }

    pub fn set(&mut self, s: usize, a: usize, value: T) {
        self.values[s * self.n_actions + a] = value;
    }

    pub fn visits(&self, s: usize, a: usize) -> u64 {
        self.visits[s * self.n_actions + a]
    }

    pub(crate) fn set_visits(&mut self, s: usize, a: usize, n: u64) {
        self.visits[s * self.n_actions + a] = n;
    }

    pub fn row(&self, s: usize) -> &[T] {
        &self.values[s * self.n_actions..(s + 1) * self.n_actions]
    }

    pub fn max_value(&self, s: usize) -> T {
        self.row(s).iter().copied().fold(T::neg_infinity(), T::max)
    }

    /// Greedy action, lowest index on ties.
    pub fn argmax(&self, s: usize) -> usize {
        argmax(self.row(s))
    }

    /// Pairs holding a nonzero value or a nonzero visit count, in
    /// (state, action) order.
    pub fn nonzero_entries(&self) -> impl Iterator<Item = (usize, usize, T, u64)> + '_ {
        (0..self.values.len()).filter_map(move |i| {
            let (v, n) = (self.values[i], self.visits[i]);
            (v != T::zero() || n != 0).then(|| (i / self.n_actions, i % self.n_actions, v, n))
        })
    }
}

/// Index of the first maximum.
pub fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// One-step Q-learning update. Bootstraps from `s_next` unless `terminal`.
#[allow(clippy::too_many_arguments)]
pub fn q_update<T: Scalar>(
    q: &mut QTable<T>,
    s: usize,
    a: usize,
    r: T,
    s_next: usize,
    terminal: bool,
    alpha: T,
    gamma: T,
) {
    let bootstrap = if terminal {
        T::zero()
    } else {
        gamma * q.max_value(s_next)
    };
    let old = q.get(s, a);
    q.set(s, a, old + alpha * (r + bootstrap - old));
    let i = s * q.n_actions + a;
    q.visits[i] += 1;
}

/// Epsilon-greedy choice. Always consumes one uniform draw, plus one more
/// when exploring.
pub fn select_action<T: Scalar, R: Rng + ?Sized>(q: &QTable<T>, s: usize, epsilon: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < epsilon {
        rng.gen_range(0..q.n_actions)
    } else {
        q.argmax(s)
    }
}
