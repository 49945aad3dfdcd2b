//! Planar geometry helpers: points, headings and compass sectors.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::Scalar;

/// A point or displacement in field coordinates (meters).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Vec2<T> {
    pub x: T,
    pub y: T,
}

impl<T: Scalar> Vec2<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn from_f64(x: f64, y: f64) -> Self {
        Self::new(T::lit(x), T::lit(y))
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    /// Unit vector pointing along `heading` (radians, counter-clockwise from +x).
    pub fn from_heading(heading: T) -> Self {
        Self::new(heading.cos(), heading.sin())
    }

    pub fn norm(self) -> T {
        self.x.hypot(self.y)
    }

    pub fn dot(self, other: Self) -> T {
        self.x * other.x + self.y * other.y
    }

    pub fn distance(self, other: Self) -> T {
        (self - other).norm()
    }

    /// Bearing of this displacement in `[-pi, pi)`.
    pub fn heading(self) -> T {
        normalize_angle(self.y.atan2(self.x))
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.x * k, self.y * k)
    }
}

impl<T: Scalar> Add for Vec2<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl<T: Scalar> Sub for Vec2<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl<T: Scalar> Neg for Vec2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl<T: Scalar> Mul<T> for Vec2<T> {
    type Output = Self;
    fn mul(self, k: T) -> Self {
        self.scale(k)
    }
}

/// Wraps an angle into `[-pi, pi)`.
pub fn normalize_angle<T: Scalar>(angle: T) -> T {
    let pi = T::PI();
    let tau = T::TAU();
    let mut a = angle - tau * ((angle + pi) / tau).floor();
    if a >= pi {
        a = a - tau;
    }
    if a < -pi {
        a = a + tau;
    }
    a
}

/// Signed smallest rotation taking `from` onto `to`, in `[-pi, pi)`.
pub fn angle_diff<T: Scalar>(to: T, from: T) -> T {
    normalize_angle(to - from)
}

/// Center of compass sector `bin` out of `sectors`; sector 0 points along +x.
pub fn sector_center<T: Scalar>(bin: usize, sectors: usize) -> T {
    let width = T::TAU() / T::lit(sectors as f64);
    normalize_angle(width * T::lit(bin as f64))
}

/// Sector whose center is angularly closest to `angle`. Ties go to the lowest
/// index.
pub fn nearest_sector<T: Scalar>(angle: T, sectors: usize) -> usize {
    let mut best = 0;
    let mut best_gap = T::infinity();
    for bin in 0..sectors {
        let gap = angle_diff(angle, sector_center::<T>(bin, sectors)).abs();
        if gap < best_gap {
            best_gap = gap;
            best = bin;
        }
    }
    best
}
