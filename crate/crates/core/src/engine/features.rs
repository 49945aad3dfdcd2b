use serde::{Deserialize, Serialize};

use crate::engine::{FieldConfig, GameState, Role};
use crate::geometry::{normalize_angle, Vec2};
use crate::Scalar;

/// Egocentric observation of one player. Angles are bearings relative to the
/// player's own heading, in `[-pi, pi)`; `opponent_heading` and
/// `own_heading` are absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FeatureVector<T> {
    pub own_heading: T,
    pub dist_to_opponent: T,
    pub angle_to_opponent: T,
    pub opponent_heading: T,
    pub dist_to_opponent_flag: T,
    pub angle_to_opponent_flag: T,
    pub dist_to_own_flag: T,
    pub angle_to_own_flag: T,
    pub dist_upper: T,
    pub dist_lower: T,
    pub dist_left: T,
    pub dist_right: T,
}

impl<T: Scalar> FeatureVector<T> {
    pub fn as_array(&self) -> [T; 12] {
        [
            self.own_heading,
            self.dist_to_opponent,
            self.angle_to_opponent,
            self.opponent_heading,
            self.dist_to_opponent_flag,
            self.angle_to_opponent_flag,
            self.dist_to_own_flag,
            self.angle_to_own_flag,
            self.dist_upper,
            self.dist_lower,
            self.dist_left,
            self.dist_right,
        ]
    }

    pub fn nearest_boundary(&self) -> T {
        self.dist_upper
            .min(self.dist_lower)
            .min(self.dist_left)
            .min(self.dist_right)
    }
}

fn relative<T: Scalar>(from: Vec2<T>, heading: T, to: Vec2<T>) -> (T, T) {
    let delta = to - from;
    let dist = delta.norm();
    let angle = if dist > T::zero() {
        normalize_angle(delta.heading() - heading)
    } else {
        T::zero()
    };
    (dist, angle)
}

pub fn extract_features<T: Scalar>(
    state: &GameState<T>,
    role: Role,
    config: &FieldConfig<T>,
) -> FeatureVector<T> {
    let me = state.player(role);
    let them = state.player(role.opponent());
    let (dist_to_opponent, angle_to_opponent) = relative(me.position, me.heading, them.position);
    let (dist_to_opponent_flag, angle_to_opponent_flag) =
        relative(me.position, me.heading, config.flag(role.opponent()));
    let (dist_to_own_flag, angle_to_own_flag) = relative(me.position, me.heading, config.flag(role));
    let [upper, lower, left, right] = config.edge_distances(me.position);
    let clamp = |d: T| d.max(T::zero());
    FeatureVector {
        own_heading: me.heading,
        dist_to_opponent,
        angle_to_opponent,
        opponent_heading: them.heading,
        dist_to_opponent_flag,
        angle_to_opponent_flag,
        dist_to_own_flag,
        angle_to_own_flag,
        dist_upper: clamp(upper),
        dist_lower: clamp(lower),
        dist_left: clamp(left),
        dist_right: clamp(right),
    }
}

/// Distance to the closest field edge; 0 on or beyond an edge.
pub fn distance_to_nearest_boundary<T: Scalar>(pos: Vec2<T>, config: &FieldConfig<T>) -> T {
    config
        .edge_distances(pos)
        .into_iter()
        .fold(T::infinity(), T::min)
        .max(T::zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::reset_round;

    #[test]
    fn nearest_boundary_examples() {
        let cfg = FieldConfig::<f64>::full();
        assert_eq!(distance_to_nearest_boundary(Vec2::new(80.0, 40.0), &cfg), 40.0);
        assert_eq!(distance_to_nearest_boundary(Vec2::new(0.0, 40.0), &cfg), 0.0);
        assert_eq!(distance_to_nearest_boundary(Vec2::new(5.0, 70.0), &cfg), 5.0);
        assert_eq!(distance_to_nearest_boundary(Vec2::new(-3.0, 70.0), &cfg), 0.0);
    }

    #[test]
    fn center_boundary_features() {
        let cfg = FieldConfig::<f64>::full();
        let mut s = reset_round(&cfg, 1).unwrap();
        s.defender.position = Vec2::new(80.0, 40.0);
        let f = extract_features(&s, Role::Defender, &cfg);
        assert_eq!(
            (f.dist_upper, f.dist_lower, f.dist_left, f.dist_right),
            (40.0, 40.0, 80.0, 80.0)
        );
    }

    #[test]
    fn opponent_due_east() {
        let cfg = FieldConfig::<f64>::full();
        let mut s = reset_round(&cfg, 1).unwrap();
        s.defender.position = Vec2::new(100.0, 40.0);
        s.defender.heading = 0.0;
        s.attacker.position = Vec2::new(112.0, 40.0);
        let f = extract_features(&s, Role::Defender, &cfg);
        assert_eq!(f.dist_to_opponent, 12.0);
        assert_eq!(f.angle_to_opponent, 0.0);
    }

    #[test]
    fn on_left_edge() {
        let cfg = FieldConfig::<f64>::full();
        let mut s = reset_round(&cfg, 1).unwrap();
        s.attacker.position = Vec2::new(0.0, 20.0);
        let f = extract_features(&s, Role::Attacker, &cfg);
        assert_eq!(f.dist_left, 0.0);
    }
}
