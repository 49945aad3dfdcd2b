//! Sparse event rewards, distance-banded shaping potentials, energy shaping
//! and their composition.

mod potential;
mod spec;

pub use potential::{Band, PiecewiseLinearPotential};
pub use spec::{
    ApplicationMode, EnergyShapingParams, RewardProfile, RewardSpec, ShapingConstants,
    ShapingTerms,
};

use serde::{Deserialize, Serialize};

use crate::engine::{
    distance_to_nearest_boundary, score_events, Action, FieldConfig, GameEvent, GameState, Role,
};
use crate::error::{Error, Result};
use crate::Scalar;

/// Event points for `role` scaled by `c_ext`.
pub fn sparse_reward<T: Scalar>(events: &[GameEvent<T>], role: Role, c_ext: T) -> T {
    c_ext * T::lit(score_events(events, role) as f64)
}

pub fn eval_potential<T: Scalar>(potential: &PiecewiseLinearPotential<T>, d: T) -> T {
    potential.eval(d)
}

/// Boundary potential of `role`'s player at its distance to the nearest edge.
pub fn boundary_potential<T: Scalar>(
    state: &GameState<T>,
    role: Role,
    spec: &RewardSpec<T>,
    config: &FieldConfig<T>,
) -> T {
    let d = distance_to_nearest_boundary(state.player(role).position, config);
    spec.scaled_boundary_potential().eval(d)
}

/// Tag potential at the inter-player distance. Only active while both
/// players stand in `role`'s own zone, where `role` holds tagging rights;
/// zero otherwise.
pub fn tag_potential<T: Scalar>(
    state: &GameState<T>,
    role: Role,
    spec: &RewardSpec<T>,
    config: &FieldConfig<T>,
) -> T {
    let att = config.zone_of(state.attacker.position);
    let def = config.zone_of(state.defender.position);
    if att != Some(role) || def != Some(role) {
        return T::zero();
    }
    spec.scaled_tag_potential().eval(state.separation())
}

/// `gamma * phi_next - phi_curr`.
pub fn potential_shaping<T: Scalar>(phi_next: T, phi_curr: T, gamma: T) -> T {
    gamma * phi_next - phi_curr
}

/// Rewards repeating the previous action (more when stopped) and penalizes
/// any change. A missing previous action counts as a change.
pub fn energy_shaping<T: Scalar>(
    prev: Option<Action>,
    curr: Action,
    params: &EnergyShapingParams<T>,
    config: &FieldConfig<T>,
) -> T {
    match prev {
        Some(p) if p == curr => {
            let stopped = config
                .speeds
                .get(curr.speed_index)
                .is_some_and(|s| *s == T::zero());
            if stopped {
                params.stop_hold_reward
            } else {
                params.hold_reward
            }
        }
        _ => -params.change_penalty,
    }
}

/// Multiplies every boundary and tag slope by `factor`. Intercepts, energy
/// parameters and `c_ext` are untouched.
pub fn scale_gradient<T: Scalar>(spec: &RewardSpec<T>, factor: T) -> Result<RewardSpec<T>> {
    if !(factor.is_finite() && factor > T::zero()) {
        return Err(Error::config(
            "reward.gradient_scale",
            format!("gradient factor must be positive, got {factor}"),
        ));
    }
    Ok(RewardSpec {
        gradient_scale: spec.gradient_scale * factor,
        ..spec.clone()
    })
}

/// Per-component reward of one transition.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RewardBreakdown<T> {
    pub sparse: T,
    pub boundary: T,
    pub tag: T,
    pub energy: T,
}

impl<T: Scalar> RewardBreakdown<T> {
    pub fn total(&self) -> T {
        self.sparse + self.boundary + self.tag + self.energy
    }
}

/// One transition as seen by a learner.
pub struct Transition<'a, T> {
    pub events: &'a [GameEvent<T>],
    pub prev_state: &'a GameState<T>,
    pub next_state: &'a GameState<T>,
    pub prev_action: Option<Action>,
    pub action: Action,
}

fn apply_mode<T: Scalar>(spec: &RewardSpec<T>, next: T, curr: T) -> T {
    match spec.mode {
        ApplicationMode::PotentialDifference => potential_shaping(next, curr, spec.gamma),
        ApplicationMode::DirectAdditive => next,
    }
}

pub fn reward_breakdown<T: Scalar>(
    t: &Transition<'_, T>,
    role: Role,
    spec: &RewardSpec<T>,
    config: &FieldConfig<T>,
) -> RewardBreakdown<T> {
    let mut out = RewardBreakdown {
        sparse: sparse_reward(t.events, role, spec.c_ext),
        ..Default::default()
    };
    if spec.terms.boundary {
        let next = boundary_potential(t.next_state, role, spec, config);
        let curr = boundary_potential(t.prev_state, role, spec, config);
        out.boundary = apply_mode(spec, next, curr);
    }
    if spec.terms.tag {
        let next = tag_potential(t.next_state, role, spec, config);
        let curr = tag_potential(t.prev_state, role, spec, config);
        out.tag = apply_mode(spec, next, curr);
    }
    if spec.terms.energy {
        out.energy = energy_shaping(t.prev_action, t.action, &spec.energy, config);
    }
    out
}

/// Sparse reward plus every enabled shaping term.
pub fn shaped_reward<T: Scalar>(
    t: &Transition<'_, T>,
    role: Role,
    spec: &RewardSpec<T>,
    config: &FieldConfig<T>,
) -> T {
    reward_breakdown(t, role, spec, config).total()
}
