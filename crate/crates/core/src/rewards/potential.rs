use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::Scalar;

/// One linear piece on `[lo, hi)`: `intercept + slope * d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Band<T> {
    pub lo: T,
    pub hi: T,
    pub intercept: T,
    pub slope: T,
}

impl<T: Scalar> Band<T> {
    pub fn new(lo: T, hi: T, intercept: T, slope: T) -> Self {
        Self {
            lo,
            hi,
            intercept,
            slope,
        }
    }

    pub fn contains(&self, d: T) -> bool {
        d >= self.lo && d < self.hi
    }

    pub fn value(&self, d: T) -> T {
        self.intercept + self.slope * d
    }
}

/// Banded linear function of a distance. Bands are sorted and disjoint;
/// distances not covered by any band evaluate to `outside_value`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct PiecewiseLinearPotential<T> {
    bands: Vec<Band<T>>,
    #[serde(default)]
    outside_value: T,
}

impl<T: Scalar> PiecewiseLinearPotential<T> {
    pub fn new(mut bands: Vec<Band<T>>, outside_value: T) -> Result<Self> {
        bands.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap_or(std::cmp::Ordering::Equal));
        for band in &bands {
            let finite = [band.lo, band.hi, band.intercept, band.slope]
                .iter()
                .all(|v| v.is_finite());
            if !finite || band.lo >= band.hi {
                return Err(Error::config(
                    "bands",
                    format!("band [{}, {}) must be finite with lo < hi", band.lo, band.hi),
                ));
            }
        }
        for pair in bands.windows(2) {
            if pair[1].lo < pair[0].hi {
                return Err(Error::config(
                    "bands",
                    format!(
                        "bands [{}, {}) and [{}, {}) overlap",
                        pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                    ),
                ));
            }
        }
        Ok(Self {
            bands,
            outside_value,
        })
    }

    /// Zero everywhere.
    pub fn empty() -> Self {
        Self {
            bands: Vec::new(),
            outside_value: T::zero(),
        }
    }

    pub fn bands(&self) -> &[Band<T>] {
        &self.bands
    }

    pub fn outside_value(&self) -> T {
        self.outside_value
    }

    pub fn slopes(&self) -> Vec<T> {
        self.bands.iter().map(|b| b.slope).collect()
    }

    pub fn eval(&self, d: T) -> T {
        self.bands
            .iter()
            .find(|b| b.contains(d))
            .map_or(self.outside_value, |b| b.value(d))
    }

    /// Same bands with every slope multiplied by `factor`.
    pub fn with_scaled_slopes(&self, factor: T) -> Self {
        Self {
            bands: self
                .bands
                .iter()
                .map(|b| Band::new(b.lo, b.hi, b.intercept, b.slope * factor))
                .collect(),
            outside_value: self.outside_value,
        }
    }

    /// Shifts intercepts, last band first, so the function reaches
    /// `outside_value` at the upper edge of the last band and adjacent bands
    /// meet. Slopes are kept.
    pub fn continuous(&self) -> Self {
        let mut bands = self.bands.clone();
        let mut target = self.outside_value;
        for band in bands.iter_mut().rev() {
            band.intercept = target - band.slope * band.hi;
            target = band.value(band.lo);
        }
        Self {
            bands,
            outside_value: self.outside_value,
        }
    }
}
