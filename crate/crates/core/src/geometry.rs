//! Observer-centred coordinate frames.
//!
//! The observer sits at the origin with identity attitude for the whole
//! episode, so the body frame and the world frame coincide. Axes: `x` forward
//! (boresight of the zero bearing), `y` right, `z` up. Azimuth `psi` is
//! measured from `x` towards `y`, elevation `theta` from the `xy` plane
//! towards `z`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Cartesian position in metres relative to the observer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CartesianPosition {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl CartesianPosition {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn distance(&self, other: &CartesianPosition) -> f64 {
        let (dx, dy, dz) = (self.x - other.x, self.y - other.y, self.z - other.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

impl From<Vector3<f64>> for CartesianPosition {
    fn from(v: Vector3<f64>) -> Self {
        Self::new(v.x, v.y, v.z)
    }
}

/// Body-spherical coordinates: azimuth, elevation (radians) and range (metres).
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SphericalCoord {
    pub psi: f64,
    pub theta: f64,
    pub r: f64,
}

impl SphericalCoord {
    pub const fn new(psi: f64, theta: f64, r: f64) -> Self {
        Self { psi, theta, r }
    }

    pub fn bearing(&self) -> Bearing {
        Bearing::new(self.psi, self.theta)
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.psi, self.theta, self.r)
    }
}

/// A pointing direction `(psi, theta)` in radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Bearing {
    pub psi: f64,
    pub theta: f64,
}

impl Bearing {
    pub const fn new(psi: f64, theta: f64) -> Self {
        Self { psi, theta }
    }

    /// Unit direction vector in the observer frame.
    pub fn unit_vector(&self) -> Vector3<f64> {
        let (sp, cp) = self.psi.sin_cos();
        let (st, ct) = self.theta.sin_cos();
        Vector3::new(ct * cp, ct * sp, st)
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    // rem_euclid maps -pi to +pi already; the only remaining edge is w == -pi.
    if w <= -PI {
        w += 2.0 * PI;
    }
    w
}

/// Measurement function: Cartesian position to `[psi, theta, r]`.
pub fn cart_to_spherical(p: &CartesianPosition) -> Result<SphericalCoord> {
    let r = p.norm();
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Domain(format!(
            "cannot convert position with range {r} to spherical coordinates"
        )));
    }
    let psi = p.y.atan2(p.x);
    let theta = (p.z / r).clamp(-1.0, 1.0).asin();
    Ok(SphericalCoord::new(psi, theta, r))
}

pub fn spherical_to_cart(s: &SphericalCoord) -> CartesianPosition {
    let (sp, cp) = s.psi.sin_cos();
    let (st, ct) = s.theta.sin_cos();
    CartesianPosition::new(s.r * ct * cp, s.r * ct * sp, s.r * st)
}

/// Great-circle angle between two pointing directions, in `[0, pi]`.
pub fn angular_offset(a: &Bearing, b: &Bearing) -> f64 {
    let u = a.unit_vector();
    let v = b.unit_vector();
    // atan2 form stays accurate for both tiny and near-antipodal separations.
    u.cross(&v).norm().atan2(u.dot(&v))
}
