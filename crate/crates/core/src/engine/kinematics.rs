use crate::engine::{Action, FieldConfig, PlayerState};
use crate::geometry::{angle_diff, normalize_angle, sector_center, Vec2};
use crate::Scalar;

/// Advances one player by `dt` seconds under `action`.
///
/// Headings slew toward the commanded sector center at no more than
/// `max_turn_rate * dt`, speed switches instantly, and the position moves
/// along the new heading. A player returning to base ignores the command and
/// drives straight home at the top speed, clearing the flag once inside its
/// base disk.
pub fn apply_kinematics<T: Scalar>(
    player: &PlayerState<T>,
    action: Action,
    dt: T,
    config: &FieldConfig<T>,
) -> PlayerState<T> {
    let mut next = player.clone();
    next.last_action = Some(action);

    if player.returning_to_base {
        let home = config.base_center(player.role);
        let to_home = home - player.position;
        let dist = to_home.norm();
        let travel = (config.max_speed() * dt).min(dist);
        if dist > T::zero() {
            next.heading = to_home.heading();
            next.position = player.position + to_home.scale(travel / dist);
        }
        next.speed = config.max_speed();
        if next.position.distance(home) <= config.base_radius {
            next.returning_to_base = false;
        }
        return next;
    }

    let sector = action.heading_bin.min(config.heading_sectors - 1);
    let target = sector_center::<T>(sector, config.heading_sectors);
    let turn = angle_diff(target, player.heading);
    let max_turn = config.max_turn_rate * dt;
    next.heading = if turn.abs() <= max_turn {
        target
    } else {
        normalize_angle(player.heading + max_turn * turn.signum())
    };

    let speed_index = action.speed_index.min(config.speeds.len() - 1);
    next.speed = config.speeds[speed_index];
    next.position = player.position + Vec2::from_heading(next.heading).scale(next.speed * dt);
    next
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::Role;

    fn player(x: f64, y: f64, heading: f64) -> PlayerState<f64> {
        PlayerState::new(Role::Defender, Vec2::new(x, y), heading)
    }

    #[test]
    fn zero_speed_keeps_position() {
        let cfg = FieldConfig::<f64>::full();
        for bin in 0..8 {
            let p = player(100.0, 30.0, 1.0);
            let next = apply_kinematics(&p, Action::new(0, bin), 0.4, &cfg);
            assert_eq!(next.position, p.position);
        }
    }

    #[test]
    fn aligned_heading_moves_speed_times_dt() {
        let cfg = FieldConfig::<f64>::full();
        let p = player(100.0, 30.0, 0.0);
        let next = apply_kinematics(&p, Action::new(2, 0), 0.4, &cfg);
        assert!((next.position.x - 100.0 - 0.8).abs() < 1e-12);
        assert_eq!(next.position.y, 30.0);
        assert_eq!(next.speed, 2.0);
    }

    #[test]
    fn turn_is_rate_limited() {
        let cfg = FieldConfig::<f64>::full();
        let p = player(100.0, 30.0, 0.0);
        // Sector 4 is due west; 90 deg/s over 0.4 s allows 36 degrees.
        let next = apply_kinematics(&p, Action::new(0, 4), 0.4, &cfg);
        assert!((next.heading.abs() - 0.4 * std::f64::consts::FRAC_PI_2).abs() < 1e-12);
    }

    #[test]
    fn returning_player_drives_home_at_max_speed() {
        let mut cfg = FieldConfig::<f64>::full();
        cfg.base_radius = 1.0;
        let mut p = player(155.0, 40.0, 0.0);
        p.returning_to_base = true;
        let next = apply_kinematics(&p, Action::new(3, 0), 0.4, &cfg);
        assert!((p.position.distance(next.position) - 1.2).abs() < 1e-12);
        assert!((next.position.x - 153.8).abs() < 1e-12);
        assert!(next.returning_to_base);
    }

    #[test]
    fn returning_clears_inside_base() {
        let cfg = FieldConfig::<f64>::full();
        let mut p = player(160.5, 40.0, 0.0);
        p.returning_to_base = true;
        let next = apply_kinematics(&p, Action::default(), 0.4, &cfg);
        assert!(!next.returning_to_base);
    }
}
