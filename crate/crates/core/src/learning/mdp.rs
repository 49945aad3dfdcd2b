use crate::error::{Error, Result};
use crate::Scalar;

/// Small tabular MDP used as a test oracle. Tables are flattened row-major:
/// `transitions[(s * n_actions + a) * n_states + s2]`, same layout for
/// `rewards`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMdp<T> {
    pub n_states: usize,
    pub n_actions: usize,
    pub transitions: Vec<T>,
    pub rewards: Vec<T>,
    pub gamma: T,
    /// When present, rewards become `r + gamma * phi(s2) - phi(s)`.
    pub potential: Option<Vec<T>>,
}

impl<T: Scalar> FiniteMdp<T> {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<T>,
        rewards: Vec<T>,
        gamma: T,
    ) -> Result<Self> {
        let mdp = Self {
            n_states,
            n_actions,
            transitions,
            rewards,
            gamma,
            potential: None,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    pub fn with_potential(mut self, phi: Vec<T>) -> Result<Self> {
        self.potential = Some(phi);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.n_states * self.n_actions * self.n_states;
        if self.n_states == 0 || self.n_actions == 0 {
            return Err(Error::Input("MDP needs at least one state and action".into()));
        }
        if self.transitions.len() != len || self.rewards.len() != len {
            return Err(Error::Input(format!(
                "tables must hold {len} entries (states x actions x states)"
            )));
        }
        if self.potential.as_ref().is_some_and(|p| p.len() != self.n_states) {
            return Err(Error::Input("potential must have one entry per state".into()));
        }
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err(Error::Input("gamma must lie in [0, 1]".into()));
        }
        let tol = T::lit(1e-12).max(T::epsilon() * T::lit(16.0));
        for (i, row) in self.transitions.chunks(self.n_states).enumerate() {
            let sum = row.iter().fold(T::zero(), |acc, p| acc + *p);
            if row.iter().any(|p| *p < T::zero() || !p.is_finite()) || (sum - T::one()).abs() > tol {
                return Err(Error::Input(format!(
                    "transition row (state {}, action {}) is not a distribution (sum {sum})",
                    i / self.n_actions,
                    i % self.n_actions
                )));
            }
        }
        Ok(())
    }

    fn reward(&self, s: usize, a: usize, s2: usize) -> T {
        let r = self.rewards[(s * self.n_actions + a) * self.n_states + s2];
        match &self.potential {
            Some(phi) => r + self.gamma * phi[s2] - phi[s],
            None => r,
        }
    }

    fn backup(&self, values: &[T], s: usize, a: usize) -> T {
        let base = (s * self.n_actions + a) * self.n_states;
        (0..self.n_states).fold(T::zero(), |acc, s2| {
            let p = self.transitions[base + s2];
            if p == T::zero() {
                acc
            } else {
                acc + p * (self.reward(s, a, s2) + self.gamma * values[s2])
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValueIterationResult<T> {
    pub values: Vec<T>,
    /// `q[s * n_actions + a]`.
    pub q: Vec<T>,
    /// Greedy action per state, lowest index on ties.
    pub policy: Vec<usize>,
    pub iterations: usize,
}

const MAX_SWEEPS: usize = 1_000_000;

/// Synchronous value iteration until the sup-norm Bellman residual is at most
/// `tol`.
pub fn value_iteration<T: Scalar>(mdp: &FiniteMdp<T>, tol: T) -> Result<ValueIterationResult<T>> {
    mdp.validate()?;
    let (ns, na) = (mdp.n_states, mdp.n_actions);
    let mut values = vec![T::zero(); ns];
    let mut q = vec![T::zero(); ns * na];
    for sweep in 1..=MAX_SWEEPS {
        for s in 0..ns {
            for a in 0..na {
                q[s * na + a] = mdp.backup(&values, s, a);
            }
        }
        let next: Vec<T> = q
            .chunks(na)
            .map(|row| row.iter().copied().fold(T::neg_infinity(), T::max))
            .collect();
        let residual = next
            .iter()
            .zip(&values)
            .fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        values = next;
        if residual <= tol {
            // Refresh q against the final values so policy and values agree.
            for s in 0..ns {
                for a in 0..na {
                    q[s * na + a] = mdp.backup(&values, s, a);
                }
            }
            let policy = q.chunks(na).map(super::qtable::argmax).collect();
            return Ok(ValueIterationResult {
                values,
                q,
                policy,
                iterations: sweep,
            });
        }
    }
    Err(Error::Input(format!(
        "value iteration did not reach tolerance {tol} in {MAX_SWEEPS} sweeps"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_series() {
        let mdp = FiniteMdp::<f64>::new(1, 1, vec![1.0], vec![1.0], 0.5).unwrap();
        let r = value_iteration(&mdp, 1e-12).unwrap();
        assert!((r.values[0] - 2.0).abs() < 1e-11);
        assert_eq!(r.policy, vec![0]);
    }

    #[test]
    fn two_state_chain() {
        // s0 -> s1 with reward 1, s1 -> s1 with reward 2, gamma 0.9.
        // V1 = 2 / 0.1 = 20, V0 = 1 + 0.9 * 20 = 19.
        let t: Vec<f64> = vec![0.0, 1.0, 0.0, 1.0];
        let r = vec![1.0, 1.0, 2.0, 2.0];
        let mdp = FiniteMdp::new(2, 1, t, r, 0.9).unwrap();
        let res = value_iteration(&mdp, 1e-10).unwrap();
        assert!((res.values[0] - 19.0).abs() < 1e-8);
        assert!((res.values[1] - 20.0).abs() < 1e-8);
    }

    #[test]
    fn constant_potential_shifts_values() {
        let t: Vec<f64> = vec![0.5, 0.5, 1.0, 0.0, 0.0, 1.0, 0.2, 0.8];
        let r = vec![1.0, 0.0, 0.5, 0.5, 0.0, 2.0, 1.0, 1.0];
        let plain = FiniteMdp::new(2, 2, t, r, 0.9).unwrap();
        let shaped = plain.clone().with_potential(vec![3.0, 3.0]).unwrap();
        let a = value_iteration(&plain, 1e-11).unwrap();
        let b = value_iteration(&shaped, 1e-11).unwrap();
        assert_eq!(a.policy, b.policy);
        // Each step adds (gamma - 1) c, so values move by -c.
        for (va, vb) in a.values.iter().zip(&b.values) {
            assert!((vb - (va - 3.0)).abs() < 1e-8);
        }
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        assert!(FiniteMdp::new(1, 1, vec![0.9], vec![0.0], 0.5).is_err());
        assert!(FiniteMdp::new(2, 1, vec![1.0, 0.0], vec![0.0; 2], 0.5).is_err());
    }
}
