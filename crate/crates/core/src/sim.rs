//! Ground truth and the AESA sensor.

use std::f64::consts::{FRAC_PI_3, PI};

use nalgebra::Vector3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal, UnitSphere};
use serde::{Deserialize, Serialize};

use crate::config::{SensorConfig, SpawnConfig};
use crate::error::{Error, Result};
use crate::geometry::{
    angular_offset, cart_to_spherical, spherical_to_cart, wrap_angle, Bearing, CartesianPosition,
    SphericalCoord,
};
use crate::rng::{self, Stream};

/// A constant-velocity ground-truth target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetState {
    pub id: u32,
    pub position: CartesianPosition,
    /// Velocity in m/s, `[vx, vy, vz]`.
    pub velocity: [f64; 3],
}

/// One sensor return. `truth_id` is `None` for clutter and must never be
/// shown to a policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub meas: SphericalCoord,
    pub t: u64,
    pub truth_id: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SensorModel {
    /// Total beam width (rad); a target is inside when its offset is at most half of it.
    pub beam_width: f64,
    /// Diagonal of the measurement covariance: `[sigma_psi^2, sigma_theta^2, sigma_r^2]`.
    pub r_diag: [f64; 3],
    pub p_detect: f64,
    pub clutter_rate: f64,
    /// Range interval used to place clutter returns.
    pub clutter_range: (f64, f64),
}

impl SensorModel {
    pub fn from_config(sensor: &SensorConfig, spawn: &SpawnConfig) -> Self {
        Self {
            beam_width: sensor.beam_width(),
            r_diag: [
                sensor.sigma_psi * sensor.sigma_psi,
                sensor.sigma_theta * sensor.sigma_theta,
                sensor.sigma_r * sensor.sigma_r,
            ],
            p_detect: sensor.p_detect,
            clutter_rate: sensor.clutter_rate,
            clutter_range: (spawn.range_min, spawn.range_max),
        }
    }

    pub fn in_beam(&self, boresight: &Bearing, direction: &Bearing) -> bool {
        angular_offset(boresight, direction) <= 0.5 * self.beam_width
    }
}

/// The three random streams the sensor consumes.
#[derive(Clone, Debug)]
pub struct SensorRngs {
    pub noise: ChaCha8Rng,
    pub detection: ChaCha8Rng,
    pub clutter: ChaCha8Rng,
}

impl SensorRngs {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            noise: rng::stream(seed, Stream::MeasurementNoise),
            detection: rng::stream(seed, Stream::Detection),
            clutter: rng::stream(seed, Stream::Clutter),
        }
    }
}

/// Draws `n` targets with bearings uniform over the field of regard, range
/// uniform in `[range_min, range_max]` and isotropic velocity of uniform speed.
pub fn spawn_targets(n: usize, seed: u64, bounds: &SpawnConfig) -> Result<Vec<TargetState>> {
    if !(bounds.range_min > 0.0 && bounds.range_max >= bounds.range_min) {
        return Err(Error::config("spawn.range_max", "invalid range bounds"));
    }
    if !(bounds.speed_min >= 0.0 && bounds.speed_max >= bounds.speed_min) {
        return Err(Error::config("spawn.speed_max", "invalid speed bounds"));
    }
    let mut rng = rng::stream(seed, Stream::Spawn);
    let targets = (0..n)
        .map(|i| {
            let psi = rng.random_range(-FRAC_PI_3..=FRAC_PI_3);
            let theta = rng.random_range(-FRAC_PI_3..=FRAC_PI_3);
            let r = rng.random_range(bounds.range_min..=bounds.range_max);
            let speed = rng.random_range(bounds.speed_min..=bounds.speed_max);
            let dir: [f64; 3] = UnitSphere.sample(&mut rng);
            TargetState {
                id: i as u32,
                position: spherical_to_cart(&SphericalCoord::new(psi, theta, r)),
                velocity: [speed * dir[0], speed * dir[1], speed * dir[2]],
            }
        })
        .collect();
    Ok(targets)
}

/// Noiseless constant-velocity propagation.
pub fn propagate(targets: &mut [TargetState], dt: f64) -> Result<()> {
    if !(dt > 0.0) {
        return Err(Error::Domain(format!("time step must be positive, got {dt}")));
    }
    for target in targets {
        target.position.x += target.velocity[0] * dt;
        target.position.y += target.velocity[1] * dt;
        target.position.z += target.velocity[2] * dt;
    }
    Ok(())
}

/// Simulates one dwell at `boresight`.
///
/// Every in-beam target consumes exactly three noise draws and one detection
/// draw whether or not it is detected, so changing `p_detect` leaves the
/// noise sequence untouched.
pub fn sense(
    targets: &[TargetState],
    boresight: Bearing,
    sensor: &SensorModel,
    t: u64,
    rngs: &mut SensorRngs,
) -> Vec<Detection> {
    let sd = sensor.r_diag.map(f64::sqrt);
    let mut detections = Vec::new();
    for target in targets {
        let Ok(truth) = cart_to_spherical(&target.position) else {
            continue;
        };
        if !sensor.in_beam(&boresight, &truth.bearing()) {
            continue;
        }
        let n: [f64; 3] = [
            rngs.noise.sample(StandardNormal),
            rngs.noise.sample(StandardNormal),
            rngs.noise.sample(StandardNormal),
        ];
        let u: f64 = rngs.detection.random();
        if u >= sensor.p_detect {
            continue;
        }
        let meas = SphericalCoord::new(
            wrap_angle(truth.psi + sd[0] * n[0]),
            (truth.theta + sd[1] * n[1]).clamp(-0.5 * PI, 0.5 * PI),
            (truth.r + sd[2] * n[2]).max(0.0),
        );
        detections.push(Detection {
            meas,
            t,
            truth_id: Some(target.id),
        });
    }
    if sensor.clutter_rate > 0.0 {
        detections.extend(clutter(boresight, sensor, t, &mut rngs.clutter));
    }
    detections
}

fn clutter(boresight: Bearing, sensor: &SensorModel, t: u64, rng: &mut ChaCha8Rng) -> Vec<Detection> {
    let count = Poisson::new(sensor.clutter_rate)
        .map(|p| p.sample(rng) as usize)
        .unwrap_or(0);
    let axis = boresight.unit_vector();
    let helper = if axis.z.abs() < 0.9 {
        Vector3::z()
    } else {
        Vector3::x()
    };
    let e1 = axis.cross(&helper).normalize();
    let e2 = axis.cross(&e1);
    let cos_max = (0.5 * sensor.beam_width).cos();
    let (r_lo, r_hi) = sensor.clutter_range;
    (0..count)
        .filter_map(|_| {
            // uniform over the spherical cap of the beam
            let cos_a: f64 = rng.random_range(cos_max..=1.0);
            let sin_a = (1.0 - cos_a * cos_a).max(0.0).sqrt();
            let phi: f64 = rng.random_range(0.0..2.0 * PI);
            let r: f64 = rng.random_range(r_lo..=r_hi);
            let d = axis * cos_a + (e1 * phi.cos() + e2 * phi.sin()) * sin_a;
            cart_to_spherical(&CartesianPosition::from(d * r))
                .ok()
                .map(|meas| Detection {
                    meas,
                    t,
                    truth_id: None,
                })
        })
        .collect()
}
