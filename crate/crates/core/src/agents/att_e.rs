use serde::{Deserialize, Serialize};

use crate::engine::{Action, FieldConfig};
use crate::error::{Error, Result};
use crate::geometry::{nearest_sector, Vec2};
use crate::Scalar;

/// Fixed-route attacker. Leaving `waypoints` empty selects the default loop
/// for the field: defender flag, then the attacker's own base center.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct AttEConfig<T> {
    pub waypoints: Vec<Vec2<T>>,
    pub cruise_speed_index: usize,
    pub waypoint_tolerance: T,
}

impl<T: Scalar> Default for AttEConfig<T> {
    fn default() -> Self {
        Self {
            waypoints: Vec::new(),
            cruise_speed_index: 2,
            waypoint_tolerance: T::lit(2.0),
        }
    }
}

impl<T: Scalar> AttEConfig<T> {
    /// Waypoints with the default loop filled in.
    pub fn resolved_waypoints(&self, field: &FieldConfig<T>) -> Vec<Vec2<T>> {
        if self.waypoints.is_empty() {
            vec![field.defender_flag, field.attacker_base]
        } else {
            self.waypoints.clone()
        }
    }

    pub fn validate(&self, field: &FieldConfig<T>) -> Result<()> {
        let waypoints = self.resolved_waypoints(field);
        if waypoints.len() < 2 {
            return Err(Error::config("opponent.waypoints", "need at least two waypoints"));
        }
        if let Some(p) = waypoints.iter().find(|p| !field.in_bounds(**p)) {
            return Err(Error::config(
                "opponent.waypoints",
                format!("waypoint ({}, {}) lies outside the field", p.x, p.y),
            ));
        }
        if self.cruise_speed_index >= field.speeds.len() {
            return Err(Error::config("opponent.cruise_speed_index", "out of range"));
        }
        if !(self.waypoint_tolerance > T::zero()) {
            return Err(Error::config("opponent.waypoint_tolerance", "must be > 0"));
        }
        Ok(())
    }
}

/// Next command for the fixed-route attacker. Depends only on the attacker's
/// own position and the route cursor; the defender is never consulted.
pub fn att_e_action<T: Scalar>(
    position: Vec2<T>,
    waypoints: &[Vec2<T>],
    cfg: &AttEConfig<T>,
    cursor: usize,
    sectors: usize,
) -> (Action, usize) {
    let mut cursor = cursor % waypoints.len();
    if position.distance(waypoints[cursor]) <= cfg.waypoint_tolerance {
        cursor = (cursor + 1) % waypoints.len();
    }
    let to_target = waypoints[cursor] - position;
    let bin = if to_target.norm() > T::zero() {
        nearest_sector(to_target.heading(), sectors)
    } else {
        0
    };
    (Action::new(cfg.cruise_speed_index, bin), cursor)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_leg_heads_toward_defender_flag() {
        let field = FieldConfig::<f64>::full();
        let cfg = AttEConfig::default();
        let wps = cfg.resolved_waypoints(&field);
        let (action, cursor) = att_e_action(field.attacker_base, &wps, &cfg, 0, 8);
        assert_eq!(cursor, 0);
        assert_eq!(action, Action::new(2, 0));
    }

    #[test]
    fn cursor_advances_within_tolerance() {
        let field = FieldConfig::<f64>::full();
        let cfg = AttEConfig::default();
        let wps = cfg.resolved_waypoints(&field);
        let (action, cursor) = att_e_action(Vec2::new(139.0, 40.0), &wps, &cfg, 0, 8);
        assert_eq!(cursor, 1);
        assert_eq!(action.heading_bin, 4);
    }

    #[test]
    fn validation() {
        let field = FieldConfig::<f64>::full();
        let mut cfg = AttEConfig::default();
        cfg.validate(&field).unwrap();
        cfg.waypoints = vec![Vec2::new(10.0, 10.0)];
        assert!(cfg.validate(&field).is_err());
        cfg.waypoints = vec![Vec2::new(10.0, 10.0), Vec2::new(170.0, 10.0)];
        assert!(cfg.validate(&field).is_err());
    }
}
