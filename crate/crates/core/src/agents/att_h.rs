use serde::{Deserialize, Serialize};

use crate::engine::{Action, FieldConfig, GameState};
use crate::error::{Error, Result};
use crate::geometry::{nearest_sector, Vec2};
use crate::Scalar;

/// Gains of the potential-field attacker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct AttHConfig<T> {
    pub goal_gain: T,
    pub defender_repulsion_gain: T,
    pub defender_repulsion_radius: T,
    pub boundary_repulsion_gain: T,
    pub boundary_repulsion_radius: T,
    pub cruise_speed_index: usize,
}

impl<T: Scalar> Default for AttHConfig<T> {
    fn default() -> Self {
        Self {
            goal_gain: T::one(),
            defender_repulsion_gain: T::lit(50.0),
            defender_repulsion_radius: T::lit(25.0),
            boundary_repulsion_gain: T::lit(10.0),
            boundary_repulsion_radius: T::lit(10.0),
            cruise_speed_index: 2,
        }
    }
}

impl<T: Scalar> AttHConfig<T> {
    /// Defaults with both radii shrunk in proportion to a field narrower than
    /// 160 m.
    pub fn for_field(field: &FieldConfig<T>) -> Self {
        let base = Self::default();
        let k = (field.width / T::lit(160.0)).min(T::one());
        Self {
            defender_repulsion_radius: base.defender_repulsion_radius * k,
            boundary_repulsion_radius: base.boundary_repulsion_radius * k,
            ..base
        }
    }

    pub fn validate(&self, field: &FieldConfig<T>) -> Result<()> {
        for (key, gain) in [
            ("opponent.goal_gain", self.goal_gain),
            ("opponent.defender_repulsion_gain", self.defender_repulsion_gain),
            ("opponent.boundary_repulsion_gain", self.boundary_repulsion_gain),
        ] {
            if !(gain.is_finite() && gain >= T::zero()) {
                return Err(Error::config(key, "gains must be finite and >= 0"));
            }
        }
        for (key, radius) in [
            ("opponent.defender_repulsion_radius", self.defender_repulsion_radius),
            ("opponent.boundary_repulsion_radius", self.boundary_repulsion_radius),
        ] {
            if !(radius.is_finite() && radius > T::zero()) {
                return Err(Error::config(key, "radii must be finite and > 0"));
            }
        }
        if self.cruise_speed_index >= field.speeds.len() {
            return Err(Error::config("opponent.cruise_speed_index", "out of range"));
        }
        Ok(())
    }
}

/// `gain * max(0, 1 - d / radius)^2` and its derivative with respect to `d`.
fn barrier<T: Scalar>(d: T, gain: T, radius: T) -> (T, T) {
    let s = T::one() - d / radius;
    if s <= T::zero() {
        return (T::zero(), T::zero());
    }
    (gain * s * s, -T::two() * gain * s / radius)
}

/// Goal the attacker is drawn to: the defender's flag before a grab, its own
/// base center after.
pub fn att_h_goal<T: Scalar>(state: &GameState<T>, field: &FieldConfig<T>) -> Vec2<T> {
    if state.flag_grabbed {
        field.attacker_base
    } else {
        field.defender_flag
    }
}

/// Value and analytic gradient of the attacker's navigation potential at
/// `pos`: linear attraction to the goal plus quadratic barriers around the
/// defender and inside each field edge.
pub fn composite_potential<T: Scalar>(
    pos: Vec2<T>,
    state: &GameState<T>,
    cfg: &AttHConfig<T>,
    field: &FieldConfig<T>,
) -> (T, Vec2<T>) {
    let goal = att_h_goal(state, field);
    let to_goal = pos - goal;
    let goal_dist = to_goal.norm();
    let mut value = cfg.goal_gain * goal_dist;
    let mut grad = if goal_dist > T::zero() {
        to_goal.scale(cfg.goal_gain / goal_dist)
    } else {
        Vec2::zero()
    };

    let from_def = pos - state.defender.position;
    let def_dist = from_def.norm();
    let (v, dv) = barrier(
        def_dist,
        cfg.defender_repulsion_gain,
        cfg.defender_repulsion_radius,
    );
    value = value + v;
    if def_dist > T::zero() {
        grad = grad + from_def.scale(dv / def_dist);
    }

    let zero = T::zero();
    let one = T::one();
    // Signed edge distances and their gradients: upper, lower, left, right.
    let edges = field.edge_distances(pos);
    let normals = [
        Vec2::new(zero, -one),
        Vec2::new(zero, one),
        Vec2::new(one, zero),
        Vec2::new(-one, zero),
    ];
    for (e, n) in edges.into_iter().zip(normals) {
        let (v, dv) = barrier(e, cfg.boundary_repulsion_gain, cfg.boundary_repulsion_radius);
        value = value + v;
        grad = grad + n.scale(dv);
    }
    (value, grad)
}

/// Steers down the composite potential at cruise speed.
pub fn att_h_action<T: Scalar>(
    state: &GameState<T>,
    cfg: &AttHConfig<T>,
    field: &FieldConfig<T>,
) -> Action {
    let (_, grad) = composite_potential(state.attacker.position, state, cfg, field);
    let descent = -grad;
    let bin = if descent.norm() > T::zero() {
        nearest_sector(descent.heading(), field.heading_sectors)
    } else {
        0
    };
    Action::new(cfg.cruise_speed_index, bin)
}
