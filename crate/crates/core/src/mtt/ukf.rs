//! Constant-velocity prediction and unscented measurement update.

use nalgebra::{Cholesky, SMatrix, SVector};

use crate::config::UkfConfig;
use crate::error::{Error, Result};
use crate::geometry::{cart_to_spherical, wrap_angle, CartesianPosition};

pub type StateVector = SVector<f64, 6>;
pub type StateCov = SMatrix<f64, 6, 6>;
pub type MeasVector = SVector<f64, 3>;
pub type MeasCov = SMatrix<f64, 3, 3>;
pub type CrossCov = SMatrix<f64, 6, 3>;

/// Diagonal jitter added on the single Cholesky retry.
pub const CHOLESKY_JITTER: f64 = 1e-9;

/// Position indices within the state `(x, vx, y, vy, z, vz)`.
pub const POSITION_INDICES: [usize; 3] = [0, 2, 4];

/// Discrete white-noise-acceleration model, one 2x2 block per Cartesian axis.
#[derive(Clone, Debug, PartialEq)]
pub struct MotionModel {
    pub dt: f64,
    pub q_tilde: f64,
    pub transition: StateCov,
    pub process_noise: StateCov,
}

impl MotionModel {
    pub fn new(dt: f64, q_tilde: f64) -> Self {
        let mut f = StateCov::zeros();
        let mut q = StateCov::zeros();
        let (dt2, dt3) = (dt * dt, dt * dt * dt);
        for axis in 0..3 {
            let i = 2 * axis;
            f[(i, i)] = 1.0;
            f[(i, i + 1)] = dt;
            f[(i + 1, i + 1)] = 1.0;
            q[(i, i)] = q_tilde * dt3 / 3.0;
            q[(i, i + 1)] = q_tilde * dt2 / 2.0;
            q[(i + 1, i)] = q_tilde * dt2 / 2.0;
            q[(i + 1, i + 1)] = q_tilde * dt;
        }
        Self {
            dt,
            q_tilde,
            transition: f,
            process_noise: q,
        }
    }
}

pub fn position_of(state: &StateVector) -> CartesianPosition {
    CartesianPosition::new(state[0], state[2], state[4])
}

pub fn symmetrize<const N: usize>(m: &SMatrix<f64, N, N>) -> SMatrix<f64, N, N> {
    (m + m.transpose()) * 0.5
}

/// Cholesky factorisation with one jittered retry.
pub fn robust_cholesky<const N: usize>(
    m: &SMatrix<f64, N, N>,
    what: &str,
) -> Result<Cholesky<f64, nalgebra::Const<N>>> {
    if let Some(c) = Cholesky::new(*m) {
        return Ok(c);
    }
    let jittered = m + SMatrix::<f64, N, N>::identity() * CHOLESKY_JITTER;
    Cholesky::new(jittered)
        .ok_or_else(|| Error::Numerical(format!("{what} is not positive definite")))
}

/// Sigma-point weights for an `n`-dimensional state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UtWeights {
    pub lambda: f64,
    pub mean0: f64,
    pub cov0: f64,
    pub rest: f64,
}

impl UtWeights {
    pub fn new(n: usize, params: &UkfConfig) -> Self {
        let n = n as f64;
        let lambda = params.alpha * params.alpha * (n + params.kappa) - n;
        let mean0 = lambda / (n + lambda);
        Self {
            lambda,
            mean0,
            cov0: mean0 + 1.0 - params.alpha * params.alpha + params.beta,
            rest: 1.0 / (2.0 * (n + lambda)),
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        if i == 0 {
            self.mean0
        } else {
            self.rest
        }
    }

    pub fn cov(&self, i: usize) -> f64 {
        if i == 0 {
            self.cov0
        } else {
            self.rest
        }
    }
}

/// `2N + 1` scaled sigma points around `mean`.
pub fn sigma_points<const N: usize>(
    mean: &SVector<f64, N>,
    cov: &SMatrix<f64, N, N>,
    weights: &UtWeights,
) -> Result<Vec<SVector<f64, N>>> {
    let scaled = cov * (N as f64 + weights.lambda);
    let chol = robust_cholesky(&scaled, "sigma-point covariance")?;
    let l = chol.l();
    let mut points = Vec::with_capacity(2 * N + 1);
    points.push(*mean);
    for i in 0..N {
        points.push(mean + l.column(i));
    }
    for i in 0..N {
        points.push(mean - l.column(i));
    }
    Ok(points)
}

/// A measurement function together with its residual arithmetic.
pub trait MeasurementModel {
    fn measure(&self, state: &StateVector) -> Result<MeasVector>;

    /// `a - b` in measurement space.
    fn residual(&self, a: &MeasVector, b: &MeasVector) -> MeasVector {
        a - b
    }

    /// Maps a measurement back onto its canonical domain.
    fn normalize(&self, z: MeasVector) -> MeasVector {
        z
    }
}

/// `h(x) = [psi, theta, r]` of the position block; azimuth residuals wrap.
#[derive(Clone, Copy, Debug, Default)]
pub struct SphericalMeasurement;

impl MeasurementModel for SphericalMeasurement {
    fn measure(&self, state: &StateVector) -> Result<MeasVector> {
        Ok(cart_to_spherical(&position_of(state))?.to_vector())
    }

    fn residual(&self, a: &MeasVector, b: &MeasVector) -> MeasVector {
        let mut d = a - b;
        d[0] = wrap_angle(d[0]);
        d
    }

    fn normalize(&self, mut z: MeasVector) -> MeasVector {
        z[0] = wrap_angle(z[0]);
        z
    }
}

/// Linear map `z = H x`, used to check the filter against the Kalman update.
#[derive(Clone, Copy, Debug)]
pub struct LinearMeasurement {
    pub h: SMatrix<f64, 3, 6>,
}

impl MeasurementModel for LinearMeasurement {
    fn measure(&self, state: &StateVector) -> Result<MeasVector> {
        Ok(self.h * state)
    }
}

/// Unscented prediction of the measurement for one track.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementPrediction {
    pub z_pred: MeasVector,
    /// Innovation covariance, including the sensor noise.
    pub s: MeasCov,
    pub cross: CrossCov,
    s_inv: MeasCov,
}

impl MeasurementPrediction {
    pub fn innovation<M: MeasurementModel>(&self, model: &M, z: &MeasVector) -> MeasVector {
        model.residual(z, &self.z_pred)
    }

    pub fn mahalanobis<M: MeasurementModel>(&self, model: &M, z: &MeasVector) -> f64 {
        let nu = self.innovation(model, z);
        (nu.transpose() * self.s_inv * nu)[(0, 0)].max(0.0).sqrt()
    }

    pub fn s_inverse(&self) -> &MeasCov {
        &self.s_inv
    }
}

/// Linear prediction step `x <- F x`, `P <- F P F^T + Q`.
pub fn predict(
    mean: &StateVector,
    cov: &StateCov,
    model: &MotionModel,
) -> Result<(StateVector, StateCov)> {
    robust_cholesky(cov, "prior covariance")?;
    let f = &model.transition;
    let mean = f * mean;
    let cov = symmetrize(&(f * cov * f.transpose() + model.process_noise));
    Ok((mean, cov))
}

pub fn predict_measurement<M: MeasurementModel>(
    mean: &StateVector,
    cov: &StateCov,
    model: &M,
    r: &MeasCov,
    params: &UkfConfig,
) -> Result<MeasurementPrediction> {
    let w = UtWeights::new(6, params);
    let points = sigma_points(mean, cov, &w)?;
    let zs = points
        .iter()
        .map(|p| model.measure(p))
        .collect::<Result<Vec<_>>>()?;

    // Average residuals about the central point so wrapped angles average correctly.
    let z0 = zs[0];
    let offset = zs
        .iter()
        .enumerate()
        .fold(MeasVector::zeros(), |acc, (i, z)| acc + model.residual(z, &z0) * w.mean(i));
    let z_pred = model.normalize(z0 + offset);

    let mut s = *r;
    let mut cross = CrossCov::zeros();
    for (i, (z, x)) in zs.iter().zip(&points).enumerate() {
        let dz = model.residual(z, &z_pred);
        let dx = x - mean;
        s += dz * dz.transpose() * w.cov(i);
        cross += dx * dz.transpose() * w.cov(i);
    }
    let s = symmetrize(&s);
    let s_inv = robust_cholesky(&s, "innovation covariance")?.inverse();
    Ok(MeasurementPrediction {
        z_pred,
        s,
        cross,
        s_inv,
    })
}

/// Output of a measurement update.
#[derive(Clone, Debug, PartialEq)]
pub struct UpdateResult {
    pub mean: StateVector,
    pub cov: StateCov,
    pub innovation: MeasVector,
    pub s: MeasCov,
}

pub fn update_with_prediction<M: MeasurementModel>(
    mean: &StateVector,
    cov: &StateCov,
    pred: &MeasurementPrediction,
    model: &M,
    z: &MeasVector,
) -> Result<UpdateResult> {
    let nu = pred.innovation(model, z);
    let gain = pred.cross * pred.s_inv;
    let mean = mean + gain * nu;
    let cov = symmetrize(&(cov - gain * pred.s * gain.transpose()));
    robust_cholesky(&cov, "posterior covariance")?;
    Ok(UpdateResult {
        mean,
        cov,
        innovation: nu,
        s: pred.s,
    })
}

pub fn update<M: MeasurementModel>(
    mean: &StateVector,
    cov: &StateCov,
    model: &M,
    z: &MeasVector,
    r: &MeasCov,
    params: &UkfConfig,
) -> Result<UpdateResult> {
    let pred = predict_measurement(mean, cov, model, r, params)?;
    update_with_prediction(mean, cov, &pred, model, z)
}
