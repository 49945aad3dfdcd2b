use serde::{Deserialize, Serialize};

use crate::engine::{FeatureVector, FieldConfig};
use crate::error::{Error, Result};
use crate::geometry::normalize_angle;
use crate::Scalar;

/// Bin layout mapping a defender feature vector to a table row.
///
/// Distance features use ascending edge lists: a value lands in the bin
/// counting how many edges are `<= value`, so a value exactly on an edge goes
/// to the upper bin. The opponent bearing (absolute, not relative to the
/// player's heading) is split into `bearing_sectors` sectors centered on the
/// action headings, again with edges assigned upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct DiscretizerConfig<T> {
    pub opponent_distance_edges: Vec<T>,
    pub bearing_sectors: usize,
    pub own_flag_distance_edges: Vec<T>,
    pub boundary_distance_edges: Vec<T>,
    /// Adds a flag-grabbed bit to the state.
    #[serde(default)]
    pub flag_state: bool,
}

impl<T: Scalar> Default for DiscretizerConfig<T> {
    fn default() -> Self {
        Self::for_field(&FieldConfig::full())
    }
}

impl<T: Scalar> DiscretizerConfig<T> {
    /// Edges aligned with the field's tag, threat and warn ranges:
    /// opponent and boundary distance at `{tag, threat, warn}`, own-flag
    /// distance at `{grab, 3 * grab}`, 8 bearing sectors.
    pub fn for_field(field: &FieldConfig<T>) -> Self {
        let ranges = vec![field.tag_range, field.threat_range, field.warn_range];
        Self {
            opponent_distance_edges: ranges.clone(),
            bearing_sectors: 8,
            own_flag_distance_edges: vec![field.grab_range, T::lit(3.0) * field.grab_range],
            boundary_distance_edges: ranges,
            flag_state: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (key, edges) in [
            ("discretizer.opponent_distance_edges", &self.opponent_distance_edges),
            ("discretizer.own_flag_distance_edges", &self.own_flag_distance_edges),
            ("discretizer.boundary_distance_edges", &self.boundary_distance_edges),
        ] {
            if edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::config(key, "edges must be finite and strictly ascending"));
            }
        }
        if self.bearing_sectors == 0 {
            return Err(Error::config("discretizer.bearing_sectors", "must be at least 1"));
        }
        Ok(())
    }

    fn dims(&self) -> [usize; 5] {
        [
            self.opponent_distance_edges.len() + 1,
            self.bearing_sectors,
            self.own_flag_distance_edges.len() + 1,
            self.boundary_distance_edges.len() + 1,
            if self.flag_state { 2 } else { 1 },
        ]
    }

    /// Size of the state-index space.
    pub fn state_count(&self) -> usize {
        self.dims().iter().product()
    }

    /// Maps features (and the flag bit, when enabled) to a state index.
    pub fn discretize(&self, f: &FeatureVector<T>, flag_grabbed: bool) -> Result<usize> {
        if let Some(bad) = f.as_array().iter().find(|v| !v.is_finite()) {
            return Err(Error::Input(format!("non-finite feature value {bad}")));
        }
        let bearing = normalize_angle(f.own_heading + f.angle_to_opponent);
        let parts = [
            edge_bin(f.dist_to_opponent, &self.opponent_distance_edges),
            sector_bin(bearing, self.bearing_sectors),
            edge_bin(f.dist_to_own_flag, &self.own_flag_distance_edges),
            edge_bin(f.nearest_boundary(), &self.boundary_distance_edges),
            usize::from(self.flag_state && flag_grabbed),
        ];
        Ok(parts
            .iter()
            .zip(self.dims())
            .fold(0, |index, (part, dim)| index * dim + part))
    }
}

pub(crate) fn edge_bin<T: Scalar>(value: T, edges: &[T]) -> usize {
    edges.iter().take_while(|e| **e <= value).count()
}

/// Sector of `angle` among `sectors` sectors centered on multiples of
/// `2 pi / sectors`. Angles on a sector edge go to the next sector
/// counter-clockwise.
pub(crate) fn sector_bin<T: Scalar>(angle: T, sectors: usize) -> usize {
    let width = T::TAU() / T::lit(sectors as f64);
    let shifted = angle + width / T::two();
    let wrapped = shifted - T::TAU() * (shifted / T::TAU()).floor();
    let bin = (wrapped / width).floor().to_usize().unwrap_or(0);
    bin.min(sectors - 1)
}
