//! Multi-target tracker.
//!
//! Per step: predict every track with the constant-velocity model, score
//! track/detection pairs by Mahalanobis distance of the unscented
//! measurement prediction, solve a gated Munkres assignment, update the
//! matched tracks, then delete tracks whose covariance Frobenius norm has
//! grown past the threshold and start a new track on every unmatched
//! detection.

pub mod assignment;
pub mod ukf;

use nalgebra::{DMatrix, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::config::{DeletionPolicy, TrackerConfig, UkfConfig};
use crate::error::Result;
use crate::geometry::{spherical_to_cart, CartesianPosition, SphericalCoord};
use crate::sim::Detection;

pub use ukf::{
    LinearMeasurement, MeasCov, MeasVector, MeasurementModel, MeasurementPrediction, MotionModel,
    SphericalMeasurement, StateCov, StateVector,
};

/// Kinematic estimate of one hypothesised target. State order is
/// `(x, vx, y, vy, z, vz)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrackEstimate {
    pub track_id: u64,
    pub mean: StateVector,
    pub cov: StateCov,
    pub last_detected: Option<u64>,
    pub born: u64,
}

impl TrackEstimate {
    pub fn position(&self) -> CartesianPosition {
        ukf::position_of(&self.mean)
    }

    pub fn velocity(&self) -> [f64; 3] {
        [self.mean[1], self.mean[3], self.mean[5]]
    }

    pub fn cov_norm(&self) -> f64 {
        self.cov.norm()
    }

    pub fn snapshot(&self) -> TrackSnapshot {
        TrackSnapshot {
            id: self.track_id,
            mean: self.mean.into(),
            cov_fro: self.cov_norm(),
            last_detected: self.last_detected,
        }
    }
}

/// Serialisable per-step view of a track.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackSnapshot {
    pub id: u64,
    pub mean: [f64; 6],
    pub cov_fro: f64,
    pub last_detected: Option<u64>,
}

impl TrackSnapshot {
    pub fn position(&self) -> CartesianPosition {
        CartesianPosition::new(self.mean[0], self.mean[2], self.mean[4])
    }
}

pub fn measurement_cov(r_diag: [f64; 3]) -> MeasCov {
    MeasCov::from_diagonal(&SVector::<f64, 3>::from(r_diag))
}

pub fn ukf_predict(track: &TrackEstimate, model: &MotionModel) -> Result<TrackEstimate> {
    let (mean, cov) = ukf::predict(&track.mean, &track.cov, model)?;
    Ok(TrackEstimate {
        mean,
        cov,
        ..track.clone()
    })
}

/// Unscented update with the spherical measurement function. Returns the
/// updated track, the wrapped innovation and the innovation covariance.
pub fn ukf_update(
    track: &TrackEstimate,
    det: &Detection,
    r: &MeasCov,
    params: &UkfConfig,
) -> Result<(TrackEstimate, MeasVector, MeasCov)> {
    let out = ukf::update(
        &track.mean,
        &track.cov,
        &SphericalMeasurement,
        &det.meas.to_vector(),
        r,
        params,
    )?;
    let updated = TrackEstimate {
        mean: out.mean,
        cov: out.cov,
        last_detected: Some(det.t),
        ..track.clone()
    };
    Ok((updated, out.innovation, out.s))
}

pub fn mahalanobis(
    track: &TrackEstimate,
    det: &Detection,
    r: &MeasCov,
    params: &UkfConfig,
) -> Result<f64> {
    let pred = ukf::predict_measurement(&track.mean, &track.cov, &SphericalMeasurement, r, params)?;
    Ok(pred.mahalanobis(&SphericalMeasurement, &det.meas.to_vector()))
}

/// New track at the converted detection: zero velocity, position covariance
/// from the unscented transform of the sensor noise, isotropic velocity prior.
pub fn initiate_track(
    det: &Detection,
    r: &MeasCov,
    config: &TrackerConfig,
    track_id: u64,
) -> Result<TrackEstimate> {
    let w = ukf::UtWeights::new(3, &config.ukf);
    let z = det.meas.to_vector();
    let points = ukf::sigma_points(&z, r, &w)?;
    let ys: Vec<SVector<f64, 3>> = points
        .iter()
        .map(|p| spherical_to_cart(&SphericalCoord::new(p[0], p[1], p[2])).to_vector())
        .collect();
    let y_mean = ys
        .iter()
        .enumerate()
        .fold(SVector::<f64, 3>::zeros(), |acc, (i, y)| acc + y * w.mean(i));
    let mut pos_cov = SMatrix::<f64, 3, 3>::zeros();
    for (i, y) in ys.iter().enumerate() {
        let d = y - y_mean;
        pos_cov += d * d.transpose() * w.cov(i);
    }
    let pos_cov = ukf::symmetrize(&pos_cov);
    ukf::robust_cholesky(&pos_cov, "initial position covariance")?;

    let p = spherical_to_cart(&det.meas);
    let mut mean = StateVector::zeros();
    mean[0] = p.x;
    mean[2] = p.y;
    mean[4] = p.z;
    let mut cov = StateCov::zeros();
    for (a, &ia) in ukf::POSITION_INDICES.iter().enumerate() {
        for (b, &ib) in ukf::POSITION_INDICES.iter().enumerate() {
            cov[(ia, ib)] = pos_cov[(a, b)];
        }
        cov[(ia + 1, ia + 1)] = config.init_vel_var;
    }
    Ok(TrackEstimate {
        track_id,
        mean,
        cov,
        last_detected: Some(det.t),
        born: det.t,
    })
}

/// Deletes diverged tracks and starts a track per unmatched detection.
///
/// Deletion runs before initiation, so a track always survives the step it
/// was born in. Ids come from `next_id` and are never reused.
pub fn manage_tracks(
    tracks: Vec<TrackEstimate>,
    unassigned: &[&Detection],
    r: &MeasCov,
    config: &TrackerConfig,
    t: u64,
    next_id: &mut u64,
) -> Result<(Vec<TrackEstimate>, Vec<u64>)> {
    let mut deleted = Vec::new();
    let mut kept: Vec<TrackEstimate> = tracks
        .into_iter()
        .filter(|track| {
            let candidate = match config.deletion {
                DeletionPolicy::All => true,
                DeletionPolicy::Coasting => track.last_detected != Some(t),
            };
            let drop = candidate && track.cov_norm() > config.c_threshold;
            if drop {
                deleted.push(track.track_id);
            }
            !drop
        })
        .collect();
    for det in unassigned {
        kept.push(initiate_track(det, r, config, *next_id)?);
        *next_id += 1;
    }
    Ok((kept, deleted))
}

/// What happened to the track list during one tracker step.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    /// `(track_id, detection index)` for every update.
    pub updated: Vec<(u64, usize)>,
    pub born: Vec<u64>,
    pub deleted: Vec<u64>,
}

/// One full tracker cycle at step `t`.
pub fn mtt_step(
    tracks: Vec<TrackEstimate>,
    detections: &[Detection],
    model: &MotionModel,
    r: &MeasCov,
    config: &TrackerConfig,
    t: u64,
    next_id: &mut u64,
) -> Result<(Vec<TrackEstimate>, StepReport)> {
    let mut tracks = tracks
        .iter()
        .map(|track| ukf_predict(track, model))
        .collect::<Result<Vec<_>>>()?;

    let predictions = tracks
        .iter()
        .map(|track| {
            ukf::predict_measurement(&track.mean, &track.cov, &SphericalMeasurement, r, &config.ukf)
        })
        .collect::<Result<Vec<_>>>()?;
    let cost = DMatrix::from_fn(tracks.len(), detections.len(), |i, j| {
        predictions[i].mahalanobis(&SphericalMeasurement, &detections[j].meas.to_vector())
    });
    let association = assignment::assign_gated(&cost, config.gate);

    let mut report = StepReport::default();
    for &(ti, di) in &association.pairs {
        let det = &detections[di];
        let track = &mut tracks[ti];
        let out = ukf::update_with_prediction(
            &track.mean,
            &track.cov,
            &predictions[ti],
            &SphericalMeasurement,
            &det.meas.to_vector(),
        )?;
        track.mean = out.mean;
        track.cov = out.cov;
        track.last_detected = Some(t);
        report.updated.push((track.track_id, di));
    }

    let unassigned: Vec<&Detection> = association
        .unassigned_cols
        .iter()
        .map(|&j| &detections[j])
        .collect();
    let first_new = *next_id;
    let (tracks, deleted) = manage_tracks(tracks, &unassigned, r, config, t, next_id)?;
    report.born = (first_new..*next_id).collect();
    report.deleted = deleted;
    Ok((tracks, report))
}

/// Tracker state owned by one episode.
#[derive(Clone, Debug)]
pub struct Tracker {
    config: TrackerConfig,
    model: MotionModel,
    r: MeasCov,
    tracks: Vec<TrackEstimate>,
    next_id: u64,
}

impl Tracker {
    pub fn new(config: TrackerConfig, dt: f64, r_diag: [f64; 3]) -> Self {
        Self {
            model: MotionModel::new(dt, config.q_tilde),
            r: measurement_cov(r_diag),
            config,
            tracks: Vec::new(),
            next_id: 0,
        }
    }

    pub fn tracks(&self) -> &[TrackEstimate] {
        &self.tracks
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn model(&self) -> &MotionModel {
        &self.model
    }

    pub fn measurement_cov(&self) -> &MeasCov {
        &self.r
    }

    pub fn reset(&mut self) {
        self.tracks.clear();
        self.next_id = 0;
    }

    pub fn step(&mut self, detections: &[Detection], t: u64) -> Result<StepReport> {
        let tracks = std::mem::take(&mut self.tracks);
        let (tracks, report) = mtt_step(
            tracks,
            detections,
            &self.model,
            &self.r,
            &self.config,
            t,
            &mut self.next_id,
        )?;
        self.tracks = tracks;
        Ok(report)
    }
}
