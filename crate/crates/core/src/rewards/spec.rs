use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::FieldConfig;
use crate::error::{Error, Result};
use crate::rewards::{Band, PiecewiseLinearPotential};
use crate::Scalar;

/// Energy shaping magnitudes. The change case pays `-change_penalty`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct EnergyShapingParams<T> {
    pub stop_hold_reward: T,
    pub hold_reward: T,
    pub change_penalty: T,
}

impl<T: Scalar> Default for EnergyShapingParams<T> {
    fn default() -> Self {
        Self {
            stop_hold_reward: T::lit(0.5),
            hold_reward: T::lit(0.4),
            change_penalty: T::lit(0.5),
        }
    }
}

impl<T: Scalar> EnergyShapingParams<T> {
    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        if !(self.hold_reward >= zero && self.stop_hold_reward >= self.hold_reward) {
            return Err(Error::config(
                "reward.energy",
                "need stop_hold_reward >= hold_reward >= 0",
            ));
        }
        if !(self.change_penalty >= zero) {
            return Err(Error::config("reward.energy.change_penalty", "must be >= 0"));
        }
        Ok(())
    }
}

/// How the boundary and tag potentials enter the reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplicationMode {
    /// `gamma * phi(next) - phi(current)`.
    #[default]
    PotentialDifference,
    /// `phi(next)` added as-is every step.
    DirectAdditive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ShapingTerms {
    pub boundary: bool,
    pub tag: bool,
    pub energy: bool,
}

/// Calibrated shaping constants. `kappa` and `omega` are stored with the
/// signs used to build the bands (boundary slopes positive, tag slopes
/// negative); `mu` holds the three energy magnitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapingConstants {
    /// (warn-band intercept, warn-band slope, threat-band intercept, threat-band slope)
    pub boundary: [f64; 4],
    /// (warn-band intercept, warn-band slope, tag-band intercept, tag-band slope)
    pub tag: [f64; 4],
    pub energy: [f64; 3],
}

impl ShapingConstants {
    pub const PPO: ShapingConstants = ShapingConstants {
        boundary: [-0.1875, 0.028125, -0.375, 0.0125],
        tag: [0.1875, -0.028125, 0.375, -0.075],
        energy: [0.5, 0.4, 0.5],
    };

    pub const DQN: ShapingConstants = ShapingConstants {
        boundary: [-0.75, 0.0375, -1.5, 0.1125],
        tag: [0.75, -0.025, 1.75, -0.075],
        energy: [0.5, 0.4, 0.5],
    };

    pub fn named(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "ppo" => Some(Self::PPO),
            "dqn" => Some(Self::DQN),
            _ => None,
        }
    }

    pub fn boundary_potential<T: Scalar>(&self, field: &FieldConfig<T>) -> PiecewiseLinearPotential<T> {
        let [i1, s1, i3, s3] = self.boundary.map(T::lit);
        PiecewiseLinearPotential::new(
            vec![
                Band::new(T::zero(), field.threat_range, i3, s3),
                Band::new(field.threat_range, field.warn_range, i1, s1),
            ],
            T::zero(),
        )
        .expect("validated field ranges give ordered bands")
    }

    pub fn tag_potential<T: Scalar>(&self, field: &FieldConfig<T>) -> PiecewiseLinearPotential<T> {
        let [i1, s1, i3, s3] = self.tag.map(T::lit);
        let mut bands = vec![Band::new(field.threat_range, field.warn_range, i1, s1)];
        if field.tag_range < field.threat_range {
            bands.insert(0, Band::new(field.tag_range, field.threat_range, i3, s3));
        }
        PiecewiseLinearPotential::new(bands, T::zero())
            .expect("validated field ranges give ordered bands")
    }

    pub fn energy<T: Scalar>(&self) -> EnergyShapingParams<T> {
        EnergyShapingParams {
            stop_hold_reward: T::lit(self.energy[0]),
            hold_reward: T::lit(self.energy[1]),
            change_penalty: T::lit(self.energy[2]),
        }
    }
}

/// A reward profile label such as `SR`, `BTRS`, `2BTRS`, `0.5BRS` or
/// `BTRS+EFF`.
///
/// Parts are joined with `+`; each part is one of `SR`, `TRS`, `BRS`, `BTRS`,
/// `EFF`, optionally prefixed by a gradient factor. All prefixed parts must
/// agree on the factor. The sparse reward is always on.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardProfile {
    pub terms: ShapingTerms,
    pub gradient_scale: f64,
    label: String,
}

impl RewardProfile {
    pub fn label(&self) -> &str {
        &self.label
    }
}

impl fmt::Display for RewardProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)
    }
}

impl FromStr for RewardProfile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut terms = ShapingTerms::default();
        let mut scale: Option<f64> = None;
        if s.trim().is_empty() {
            return Err(Error::config("profile", "empty reward profile"));
        }
        for part in s.split('+').map(str::trim) {
            let split = part
                .find(|c: char| c.is_ascii_alphabetic())
                .ok_or_else(|| Error::config("profile", format!("`{part}` names no profile")))?;
            let (prefix, name) = part.split_at(split);
            if !prefix.is_empty() {
                let factor: f64 = prefix.parse().map_err(|_| {
                    Error::config("profile", format!("bad gradient prefix `{prefix}` in `{part}`"))
                })?;
                if !(factor.is_finite() && factor > 0.0) {
                    return Err(Error::config("profile", "gradient prefix must be positive"));
                }
                match scale {
                    Some(prev) if prev != factor => {
                        return Err(Error::config(
                            "profile",
                            format!("conflicting gradient prefixes {prev} and {factor}"),
                        ))
                    }
                    _ => scale = Some(factor),
                }
            }
            match name.to_ascii_uppercase().as_str() {
                "SR" => {}
                "TRS" => terms.tag = true,
                "BRS" => terms.boundary = true,
                "BTRS" => {
                    terms.boundary = true;
                    terms.tag = true;
                }
                "EFF" => terms.energy = true,
                other => {
                    return Err(Error::config(
                        "profile",
                        format!("unknown profile `{other}` (expected SR, TRS, BRS, BTRS or EFF)"),
                    ))
                }
            }
        }
        Ok(Self {
            terms,
            gradient_scale: scale.unwrap_or(1.0),
            label: s.trim().to_string(),
        })
    }
}

/// Complete reward definition for one learner.
///
/// The potentials are kept at their 1x calibration; `gradient_scale`
/// multiplies their slopes whenever they are evaluated, so repeated scaling
/// composes exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RewardSpec<T> {
    pub c_ext: T,
    pub gamma: T,
    pub terms: ShapingTerms,
    pub boundary_potential: PiecewiseLinearPotential<T>,
    pub tag_potential: PiecewiseLinearPotential<T>,
    pub energy: EnergyShapingParams<T>,
    pub mode: ApplicationMode,
    pub gradient_scale: T,
}

impl<T: Scalar> RewardSpec<T> {
    /// Sparse reward only, with the given constants loaded but disabled.
    pub fn sparse(constants: &ShapingConstants, field: &FieldConfig<T>) -> Self {
        Self {
            c_ext: T::lit(50.0),
            gamma: T::lit(0.99),
            terms: ShapingTerms::default(),
            boundary_potential: constants.boundary_potential(field),
            tag_potential: constants.tag_potential(field),
            energy: constants.energy(),
            mode: ApplicationMode::default(),
            gradient_scale: T::one(),
        }
    }

    pub fn from_profile(
        profile: &RewardProfile,
        constants: &ShapingConstants,
        field: &FieldConfig<T>,
    ) -> Self {
        Self {
            terms: profile.terms,
            gradient_scale: T::lit(profile.gradient_scale),
            ..Self::sparse(constants, field)
        }
    }

    /// Parses `label` and builds the spec from the PPO constants.
    pub fn named(label: &str, field: &FieldConfig<T>) -> Result<Self> {
        let profile: RewardProfile = label.parse()?;
        Ok(Self::from_profile(&profile, &ShapingConstants::PPO, field))
    }

    /// Boundary potential with `gradient_scale` applied.
    pub fn scaled_boundary_potential(&self) -> PiecewiseLinearPotential<T> {
        self.boundary_potential.with_scaled_slopes(self.gradient_scale)
    }

    /// Tag potential with `gradient_scale` applied.
    pub fn scaled_tag_potential(&self) -> PiecewiseLinearPotential<T> {
        self.tag_potential.with_scaled_slopes(self.gradient_scale)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gradient_scale.is_finite() && self.gradient_scale > T::zero()) {
            return Err(Error::config("reward.gradient_scale", "must be > 0"));
        }
        if !(self.gamma >= T::zero() && self.gamma <= T::one()) {
            return Err(Error::config("reward.gamma", "must lie in [0, 1]"));
        }
        if !self.c_ext.is_finite() {
            return Err(Error::config("reward.c_ext", "must be finite"));
        }
        self.energy.validate()
    }
}
