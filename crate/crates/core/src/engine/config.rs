use serde::{Deserialize, Serialize};

use crate::engine::Role;
use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::Scalar;

/// Static field geometry, event ranges and dynamics parameters.
///
/// Coordinates run from `(0, 0)` (lower-left corner) to `(width, depth)`.
/// The field is split at `x = width / 2`; each player's zone is the half that
/// holds its own flag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", default)]
pub struct FieldConfig<T> {
    pub width: T,
    pub depth: T,
    pub base_radius: T,
    pub tag_range: T,
    pub grab_range: T,
    pub capture_range: T,
    pub warn_range: T,
    pub threat_range: T,
    pub attacker_flag: Vec2<T>,
    pub defender_flag: Vec2<T>,
    pub attacker_base: Vec2<T>,
    pub defender_base: Vec2<T>,
    /// Seconds per engine step.
    pub dt: T,
    pub max_episode_steps: u32,
    /// Commandable speeds (m/s), indexed by `Action::speed_index`.
    pub speeds: Vec<T>,
    /// Number of compass sectors `Action::heading_bin` ranges over.
    pub heading_sectors: usize,
    /// Radians per second.
    pub max_turn_rate: T,
}

impl<T: Scalar> Default for FieldConfig<T> {
    fn default() -> Self {
        Self::full()
    }
}

impl<T: Scalar> FieldConfig<T> {
    /// The 160 m x 80 m field. Each flag sits on the front edge of its base
    /// disk, so a player spawning in its base is not already on top of it.
    pub fn full() -> Self {
        Self {
            width: T::lit(160.0),
            depth: T::lit(80.0),
            base_radius: T::lit(10.0),
            tag_range: T::lit(10.0),
            grab_range: T::lit(10.0),
            capture_range: T::lit(10.0),
            warn_range: T::lit(40.0),
            threat_range: T::lit(20.0),
            attacker_flag: Vec2::from_f64(20.0, 40.0),
            defender_flag: Vec2::from_f64(140.0, 40.0),
            attacker_base: Vec2::from_f64(10.0, 40.0),
            defender_base: Vec2::from_f64(150.0, 40.0),
            dt: T::lit(0.4),
            max_episode_steps: 500,
            speeds: [0.0, 1.0, 2.0, 3.0].iter().map(|&s| T::lit(s)).collect(),
            heading_sectors: 8,
            max_turn_rate: T::lit(std::f64::consts::FRAC_PI_2),
        }
    }

    /// A 40 m x 20 m field for desk-scale training runs. Ranges shrink with the
    /// field so that the tag, threat and warn bands still nest.
    pub fn reduced() -> Self {
        Self {
            width: T::lit(40.0),
            depth: T::lit(20.0),
            base_radius: T::lit(3.0),
            tag_range: T::lit(3.0),
            grab_range: T::lit(3.0),
            capture_range: T::lit(3.0),
            warn_range: T::lit(10.0),
            threat_range: T::lit(5.0),
            attacker_flag: Vec2::from_f64(6.0, 10.0),
            defender_flag: Vec2::from_f64(34.0, 10.0),
            attacker_base: Vec2::from_f64(3.0, 10.0),
            defender_base: Vec2::from_f64(37.0, 10.0),
            max_episode_steps: 150,
            ..Self::full()
        }
    }

    /// Field preset by name (`full` or `reduced`).
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "full" => Some(Self::full()),
            "reduced" => Some(Self::reduced()),
            _ => None,
        }
    }

    pub fn max_speed(&self) -> T {
        self.speeds.iter().copied().fold(T::zero(), T::max)
    }

    pub fn action_count(&self) -> usize {
        self.speeds.len() * self.heading_sectors
    }

    pub fn midline(&self) -> T {
        self.width / T::two()
    }

    pub fn in_bounds(&self, p: Vec2<T>) -> bool {
        p.x >= T::zero() && p.x <= self.width && p.y >= T::zero() && p.y <= self.depth
    }

    fn on_left_half(&self, p: Vec2<T>) -> bool {
        p.x < self.midline()
    }

    /// Owner of the zone containing `p`; `None` when `p` is out of bounds.
    pub fn zone_of(&self, p: Vec2<T>) -> Option<Role> {
        if !self.in_bounds(p) {
            return None;
        }
        let attacker_left = self.on_left_half(self.attacker_flag);
        if self.on_left_half(p) == attacker_left {
            Some(Role::Attacker)
        } else {
            Some(Role::Defender)
        }
    }

    pub fn base_center(&self, role: Role) -> Vec2<T> {
        match role {
            Role::Attacker => self.attacker_base,
            Role::Defender => self.defender_base,
        }
    }

    pub fn flag(&self, role: Role) -> Vec2<T> {
        match role {
            Role::Attacker => self.attacker_flag,
            Role::Defender => self.defender_flag,
        }
    }

    /// Perpendicular distances to the (upper, lower, left, right) edges,
    /// signed: negative on the far side of an edge.
    pub fn edge_distances(&self, p: Vec2<T>) -> [T; 4] {
        [self.depth - p.y, p.y, p.x, self.width - p.x]
    }

    /// Checks every invariant, naming the first offending key.
    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let positive = [
            ("field.width", self.width),
            ("field.depth", self.depth),
            ("field.tag_range", self.tag_range),
            ("field.grab_range", self.grab_range),
            ("field.capture_range", self.capture_range),
            ("field.warn_range", self.warn_range),
            ("field.threat_range", self.threat_range),
            ("field.dt", self.dt),
            ("field.max_turn_rate", self.max_turn_rate),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > zero) {
                return Err(Error::config(key, format!("must be a finite positive number, got {v}")));
            }
        }
        if !(self.base_radius.is_finite() && self.base_radius >= zero) {
            return Err(Error::config("field.base_radius", "must be finite and >= 0"));
        }
        if self.threat_range >= self.warn_range {
            return Err(Error::config(
                "field.threat_range, field.warn_range",
                format!(
                    "threat_range ({}) must be less than warn_range ({})",
                    self.threat_range, self.warn_range
                ),
            ));
        }
        if self.tag_range > self.threat_range {
            return Err(Error::config(
                "field.tag_range, field.threat_range",
                format!(
                    "tag_range ({}) must not exceed threat_range ({})",
                    self.tag_range, self.threat_range
                ),
            ));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::config("field.max_episode_steps", "must be at least 1"));
        }
        if self.speeds.is_empty() {
            return Err(Error::config("field.speeds", "must list at least one speed"));
        }
        if self.speeds.iter().any(|s| !(s.is_finite() && *s >= zero)) {
            return Err(Error::config("field.speeds", "speeds must be finite and >= 0"));
        }
        if self.heading_sectors == 0 {
            return Err(Error::config("field.heading_sectors", "must be at least 1"));
        }
        if self.on_left_half(self.attacker_flag) == self.on_left_half(self.defender_flag) {
            return Err(Error::config(
                "field.attacker_flag, field.defender_flag",
                "flags must lie in opposite halves of the field",
            ));
        }
        for (key, role, flag) in [
            ("field.attacker_flag", Role::Attacker, self.attacker_flag),
            ("field.defender_flag", Role::Defender, self.defender_flag),
        ] {
            if self.zone_of(flag) != Some(role) {
                return Err(Error::config(key, "flag must lie inside its owner's zone"));
            }
        }
        for (key, role, center) in [
            ("field.attacker_base", Role::Attacker, self.attacker_base),
            ("field.defender_base", Role::Defender, self.defender_base),
        ] {
            if self.zone_of(center) != Some(role) {
                return Err(Error::config(key, "base center must lie inside its owner's zone"));
            }
            let r = self.base_radius;
            let inside = center.x - r >= zero
                && center.x + r <= self.width
                && center.y - r >= zero
                && center.y + r <= self.depth;
            if !inside {
                return Err(Error::config(key, "base disk must lie fully inside the field"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        FieldConfig::<f64>::full().validate().unwrap();
        FieldConfig::<f64>::reduced().validate().unwrap();
        FieldConfig::<f32>::full().validate().unwrap();
    }

    #[test]
    fn threat_not_below_warn_names_both_keys() {
        let mut cfg = FieldConfig::<f64>::full();
        cfg.threat_range = 40.0;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("threat_range") && err.contains("warn_range"), "{err}");
    }

    #[test]
    fn tag_band_must_be_non_empty() {
        let mut cfg = FieldConfig::<f64>::full();
        cfg.tag_range = 25.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn zones_follow_flags() {
        let cfg = FieldConfig::<f64>::full();
        assert_eq!(cfg.zone_of(Vec2::new(30.0, 40.0)), Some(Role::Attacker));
        assert_eq!(cfg.zone_of(Vec2::new(80.0, 40.0)), Some(Role::Defender));
        assert_eq!(cfg.zone_of(Vec2::new(161.0, 40.0)), None);
    }
}
