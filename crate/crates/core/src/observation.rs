//! Fixed-shape observation: normalised track matrix plus scan raster.

use std::f64::consts::FRAC_PI_3;

use serde::{Deserialize, Serialize};

use crate::config::OverflowPolicy;
use crate::error::Result;
use crate::mtt::TrackEstimate;
use crate::scan_history::ScanHistory;

pub const MAX_TRACKS: usize = 15;
pub const TRACK_FEATURES: usize = 7;
pub const RASTER_SIZE: usize = 48;

const RANGE_SCALE: f64 = 100_000.0;
const ANGLE_SCALE: f64 = FRAC_PI_3;
const SPEED_SCALE: f64 = 100.0;

/// Track matrix (`MAX_TRACKS x 7`, row-major) and SSV raster (`1 x N x N`,
/// row-major), both `f32`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub track_matrix: Vec<f32>,
    pub scan_raster: Vec<f32>,
    pub raster_size: usize,
}

impl Observation {
    pub fn zeros(raster_size: usize) -> Self {
        Self {
            track_matrix: vec![0.0; MAX_TRACKS * TRACK_FEATURES],
            scan_raster: vec![0.0; raster_size * raster_size],
            raster_size,
        }
    }

    pub fn track_row(&self, i: usize) -> &[f32] {
        &self.track_matrix[i * TRACK_FEATURES..(i + 1) * TRACK_FEATURES]
    }

    pub fn raster_shape(&self) -> [usize; 3] {
        [1, self.raster_size, self.raster_size]
    }
}

/// `[r/1e5 - 1, psi/(pi/3), theta/(pi/3), vx/100, vy/100, vz/100, |P|_F / c_threshold]`.
///
/// Azimuth is `atan2(y, x)` and elevation `asin(z / r)`; a track at the
/// origin encodes both angles as zero.
pub fn encode_track(track: &TrackEstimate, c_threshold: f64) -> [f64; TRACK_FEATURES] {
    let p = track.position();
    let r = p.norm();
    let psi = p.y.atan2(p.x);
    let theta = if r > 0.0 { (p.z / r).clamp(-1.0, 1.0).asin() } else { 0.0 };
    let v = track.velocity();
    [
        r / RANGE_SCALE - 1.0,
        psi / ANGLE_SCALE,
        theta / ANGLE_SCALE,
        v[0] / SPEED_SCALE,
        v[1] / SPEED_SCALE,
        v[2] / SPEED_SCALE,
        track.cov_norm() / c_threshold,
    ]
}

/// Selects at most `MAX_TRACKS` tracks and returns them in ascending id order.
pub fn select_tracks(tracks: &[TrackEstimate], overflow: OverflowPolicy) -> Vec<&TrackEstimate> {
    let mut chosen: Vec<&TrackEstimate> = tracks.iter().collect();
    if chosen.len() > MAX_TRACKS {
        match overflow {
            OverflowPolicy::LowestCovariance => {
                chosen.sort_by(|a, b| {
                    a.cov_norm()
                        .total_cmp(&b.cov_norm())
                        .then(a.track_id.cmp(&b.track_id))
                });
            }
            OverflowPolicy::FirstById => chosen.sort_by_key(|t| t.track_id),
        }
        chosen.truncate(MAX_TRACKS);
    }
    chosen.sort_by_key(|t| t.track_id);
    chosen
}

pub fn build_observation(
    tracks: &[TrackEstimate],
    history: &ScanHistory,
    now: u64,
    c_threshold: f64,
    overflow: OverflowPolicy,
    raster_size: usize,
) -> Result<Observation> {
    let mut obs = Observation::zeros(raster_size);
    for (row, track) in select_tracks(tracks, overflow).into_iter().enumerate() {
        let enc = encode_track(track, c_threshold);
        for (k, v) in enc.into_iter().enumerate() {
            obs.track_matrix[row * TRACK_FEATURES + k] = v as f32;
        }
    }
    let raster = history.rasterize(now, raster_size)?;
    obs.scan_raster = raster.values.iter().map(|&v| v as f32).collect();
    Ok(obs)
}
