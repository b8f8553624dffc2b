//! Polar-coordinate geometry over scanner-relative point arrays.
//!
//! Conventions used throughout the crate:
//!
//! * azimuth `theta` is measured from +x toward +y and lives in `[-π, π)`;
//!   the point at exact azimuth π is reported as −π,
//! * depth `r` is the Euclidean norm of `(x, y, z)`,
//! * inclination `phi` is the angle between +z and the point vector, in `[0, π]`,
//! * the origin has `theta = 0` and `phi = 0`.
//!
//! Coordinates are stored as `f32` in scans; every trigonometric step runs in
//! `f64`.

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};
use std::fmt::Debug;
use std::ops::Not;

use crate::error::{Error, Result};
use crate::scan::Label;

/// Storage precision of a point coordinate.
pub trait Scalar: Copy + PartialEq + Debug + Default + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Scalar for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Scalar for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
}

/// One LiDAR return: scanner-relative position in meters plus intensity.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point<T: Scalar = f32> {
    pub x: T,
    pub y: T,
    pub z: T,
    pub intensity: T,
}

impl<T: Scalar> Point<T> {
    pub fn new(x: T, y: T, z: T, intensity: T) -> Self {
        Self { x, y, z, intensity }
    }

    pub fn is_finite(&self) -> bool {
        [self.x, self.y, self.z, self.intensity]
            .iter()
            .all(|v| v.to_f64().is_finite())
    }

    /// Azimuth in `[-π, π)`.
    #[inline]
    pub fn azimuth(&self) -> f64 {
        azimuth(self.x.to_f64(), self.y.to_f64())
    }

    #[inline]
    pub fn depth(&self) -> f64 {
        let (x, y, z) = (self.x.to_f64(), self.y.to_f64(), self.z.to_f64());
        (x * x + y * y + z * z).sqrt()
    }

    pub fn to_polar(&self) -> PolarCoord {
        to_polar(self)
    }
}

/// Azimuth of the planar vector `(x, y)` in `[-π, π)`; the origin maps to 0.
#[inline]
pub fn azimuth(x: f64, y: f64) -> f64 {
    if x == 0.0 && y == 0.0 {
        return 0.0;
    }
    let theta = y.atan2(x);
    if theta >= PI {
        -PI
    } else {
        theta
    }
}

/// Maps any finite angle into `[-π, π)`.
pub fn wrap_angle(angle: f64) -> f64 {
    if (-PI..PI).contains(&angle) {
        return angle;
    }
    let mut r = angle.rem_euclid(TAU);
    if r >= TAU {
        r = 0.0;
    }
    if r >= PI {
        r - TAU
    } else {
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarCoord {
    pub theta: f64,
    pub r: f64,
    pub phi: f64,
}

impl PolarCoord {
    /// Inverse of [`to_polar`], in double precision.
    pub fn to_cartesian(&self) -> [f64; 3] {
        let (sin_phi, cos_phi) = self.phi.sin_cos();
        let (sin_theta, cos_theta) = self.theta.sin_cos();
        [
            self.r * sin_phi * cos_theta,
            self.r * sin_phi * sin_theta,
            self.r * cos_phi,
        ]
    }
}

pub fn to_polar<T: Scalar>(p: &Point<T>) -> PolarCoord {
    let (x, y, z) = (p.x.to_f64(), p.y.to_f64(), p.z.to_f64());
    let planar = x.hypot(y);
    let r = planar.hypot(z);
    // atan2 is well conditioned everywhere, unlike acos(z / r) near the poles.
    let phi = if r == 0.0 { 0.0 } else { planar.atan2(z) };
    PolarCoord {
        theta: azimuth(x, y),
        r,
        phi,
    }
}

/// Half-open azimuth interval `[alpha, beta)`.
///
/// `alpha > beta` denotes a sector crossing the ±π seam. Width 0 and width 2π
/// are both representable even though both have `alpha == beta`; the stored
/// width disambiguates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SectorSpec {
    alpha: f64,
    beta: f64,
    width: f64,
}

impl SectorSpec {
    /// Builds `[alpha, beta)`. `alpha` must lie in `[-π, π)`; `beta` may also be
    /// exactly π, which is the same boundary as −π but lets `[-π, π)` name the
    /// full circle.
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(-PI..PI).contains(&alpha) {
            return Err(Error::InvalidSector(format!(
                "alpha {alpha} is outside [-π, π)"
            )));
        }
        if !(-PI..=PI).contains(&beta) {
            return Err(Error::InvalidSector(format!(
                "beta {beta} is outside [-π, π]"
            )));
        }
        let width = if beta >= alpha {
            beta - alpha
        } else {
            beta - alpha + TAU
        };
        let beta = if beta == PI { -PI } else { beta };
        Ok(Self { alpha, beta, width })
    }

    /// Sector starting at `alpha` (wrapped into `[-π, π)`) spanning `width`
    /// radians counter-clockwise.
    pub fn from_start_width(alpha: f64, width: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::InvalidSector(format!("alpha {alpha} is not finite")));
        }
        if !(0.0..=TAU).contains(&width) {
            return Err(Error::InvalidSectorWidth(width));
        }
        let alpha = wrap_angle(alpha);
        let beta = if width == TAU {
            alpha
        } else {
            wrap_angle(alpha + width)
        };
        Ok(Self { alpha, beta, width })
    }

    pub fn full() -> Self {
        Self {
            alpha: -PI,
            beta: -PI,
            width: TAU,
        }
    }

    pub fn empty_at(alpha: f64) -> Result<Self> {
        Self::from_start_width(alpha, 0.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// `[beta, alpha)`: every azimuth lies in exactly one of `self` and its
    /// complement.
    pub fn complement(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
            width: TAU - self.width,
        }
    }

    /// Membership test for an azimuth already in `[-π, π)`.
    #[inline]
    pub fn contains(&self, theta: f64) -> bool {
        if self.alpha < self.beta {
            self.alpha <= theta && theta < self.beta
        } else if self.alpha > self.beta {
            theta >= self.alpha || theta < self.beta
        } else {
            // Coincident bounds: either nothing or everything.
            self.width > PI
        }
    }
}

/// One flag per point of the array the mask was built from.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Mask {
    flags: Vec<bool>,
}

impl Mask {
    pub fn from_flags(flags: Vec<bool>) -> Self {
        Self { flags }
    }

    pub fn len(&self) -> usize {
        self.flags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flags.is_empty()
    }

    pub fn flags(&self) -> &[bool] {
        &self.flags
    }

    pub fn count(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            flags: self.flags.iter().map(|f| !f).collect(),
        }
    }

    /// Elementwise OR.
    ///
    /// # Panics
    /// If the two masks have different lengths.
    pub fn or(&self, other: &Mask) -> Self {
        assert_eq!(self.len(), other.len(), "mask length mismatch");
        Self {
            flags: self
                .flags
                .iter()
                .zip(&other.flags)
                .map(|(a, b)| *a || *b)
                .collect(),
        }
    }

    /// Elementwise AND.
    ///
    /// # Panics
    /// If the two masks have different lengths.
    pub fn and(&self, other: &Mask) -> Self {
        assert_eq!(self.len(), other.len(), "mask length mismatch");
        Self {
            flags: self
                .flags
                .iter()
                .zip(&other.flags)
                .map(|(a, b)| *a && *b)
                .collect(),
        }
    }
}

impl Not for &Mask {
    type Output = Mask;

    fn not(self) -> Mask {
        self.complement()
    }
}

pub fn sector_mask<T: Scalar>(points: &[Point<T>], sector: &SectorSpec) -> Mask {
    Mask {
        flags: points
            .iter()
            .map(|p| sector.contains(p.azimuth()))
            .collect(),
    }
}

/// Flags labels whose semantic id is in `classes`.
pub fn class_mask(labels: &[Label], classes: &BTreeSet<u16>) -> Mask {
    if classes.is_empty() {
        return Mask {
            flags: vec![false; labels.len()],
        };
    }
    Mask {
        flags: labels
            .iter()
            .map(|l| classes.contains(&l.semantic()))
            .collect(),
    }
}

/// Rotation about the z axis by `omega` radians (counter-clockwise seen from +z).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RotationZ {
    pub omega: f64,
}

impl RotationZ {
    pub fn new(omega: f64) -> Self {
        Self { omega }
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        let (s, c) = self.omega.sin_cos();
        [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    }

    #[inline]
    pub fn apply<T: Scalar>(&self, p: &Point<T>) -> Point<T> {
        let (s, c) = self.omega.sin_cos();
        rotate_with(p, s, c)
    }
}

#[inline]
fn rotate_with<T: Scalar>(p: &Point<T>, s: f64, c: f64) -> Point<T> {
    let (x, y) = (p.x.to_f64(), p.y.to_f64());
    Point {
        x: T::from_f64(c * x - s * y),
        y: T::from_f64(s * x + c * y),
        z: p.z,
        intensity: p.intensity,
    }
}

pub fn rotate_z<T: Scalar>(points: &[Point<T>], rot: RotationZ) -> Vec<Point<T>> {
    if rot.omega == 0.0 {
        return points.to_vec();
    }
    let (s, c) = rot.omega.sin_cos();
    points.iter().map(|p| rotate_with(p, s, c)).collect()
}
