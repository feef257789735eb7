//! Scan history and the diffusing scan-value field.
//!
//! Every beam dwell leaves a zero-correlation bivariate Gaussian bump centred
//! on the beam direction. The bump's standard deviation grows geometrically
//! with age, `sigma0 * (1 + gamma)^age`, so old scans flatten out. The sum of
//! all bumps in the FIFO is the scan value (SV); dividing by the analytic
//! peak of a five-scan pile-up gives the scaled scan value (SSV).

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_3, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Bearing;

/// z-value of a two-tailed 95% interval, doubled: the beam spans `+-1.96 sigma0`.
const BEAM_Z_SPAN: f64 = 3.92;

/// Initial scan spread such that the beam holds 95% of the Gaussian mass.
pub fn sigma0_from_beamwidth(beam_width: f64) -> Result<f64> {
    if !(beam_width > 0.0) || !beam_width.is_finite() {
        return Err(Error::Domain(format!(
            "beam width must be positive, got {beam_width}"
        )));
    }
    Ok(beam_width / BEAM_Z_SPAN)
}

/// Diffusion rate such that a scan's peak drops to `zeta` times its initial
/// height after `decay_steps` steps: `(1 + gamma)^(-2 T) = zeta`.
pub fn gamma_from_decay(zeta: f64, decay_steps: u64) -> Result<f64> {
    if !(zeta > 0.0 && zeta <= 1.0) {
        return Err(Error::Domain(format!(
            "peak ratio must lie in (0, 1], got {zeta}"
        )));
    }
    if decay_steps == 0 {
        return Err(Error::Domain("decay horizon must be at least one step".into()));
    }
    Ok(zeta.powf(-1.0 / (2.0 * decay_steps as f64)) - 1.0)
}

/// Zero-correlation bivariate Gaussian with equal spreads on both axes.
pub fn bivariate_scan_pdf(x: Bearing, mu: Bearing, sigma: f64) -> f64 {
    let a = (x.psi - mu.psi) / sigma;
    let b = (x.theta - mu.theta) / sigma;
    (-0.5 * (a * a + b * b)).exp() / (2.0 * PI * sigma * sigma)
}

/// Largest attainable SV when one scan per step lands on the same point for
/// `horizon + 1` steps.
pub fn p_max(horizon: u64, sigma0: f64, gamma: f64) -> f64 {
    let base = 2.0 * PI * sigma0 * sigma0;
    let growth = (1.0 + gamma) * (1.0 + gamma);
    let mut sum = 0.0;
    let mut scale = 1.0;
    for _ in 0..=horizon {
        sum += 1.0 / (base * scale);
        scale *= growth;
    }
    sum
}

/// One beam dwell: centre direction and the step it happened at.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanRecord {
    pub mu: Bearing,
    pub t: u64,
}

/// Row-major `N x N` raster of SSV values; cell `(i, j)` sits at `(psi_i, theta_j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanRaster {
    pub size: usize,
    pub values: Vec<f64>,
}

impl ScanRaster {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.size + j]
    }

    /// Evenly spaced axis values from `-pi/3` to `pi/3` inclusive.
    pub fn axis(size: usize) -> Vec<f64> {
        let step = 2.0 * FRAC_PI_3 / (size - 1) as f64;
        (0..size).map(|i| -FRAC_PI_3 + i as f64 * step).collect()
    }
}

/// FIFO of past scans plus the parameters of the diffusing field.
#[derive(Clone, Debug, PartialEq)]
pub struct ScanHistory {
    records: VecDeque<ScanRecord>,
    capacity: usize,
    sigma0: f64,
    gamma: f64,
    p_max_ref: f64,
}

impl ScanHistory {
    /// `p_max_horizon` selects the normalising constant `p_max(horizon)`.
    pub fn new(capacity: usize, sigma0: f64, gamma: f64, p_max_horizon: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::Domain("scan history capacity must be positive".into()));
        }
        if !(sigma0 > 0.0) || !sigma0.is_finite() {
            return Err(Error::Domain(format!("sigma0 must be positive, got {sigma0}")));
        }
        if !(gamma >= 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("gamma must be non-negative, got {gamma}")));
        }
        Ok(Self {
            records: VecDeque::with_capacity(capacity),
            capacity,
            sigma0,
            gamma,
            p_max_ref: p_max(p_max_horizon, sigma0, gamma),
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn sigma0(&self) -> f64 {
        self.sigma0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn p_max_ref(&self) -> f64 {
        self.p_max_ref
    }

    pub fn records(&self) -> impl Iterator<Item = &ScanRecord> {
        self.records.iter()
    }

    pub fn clear(&mut self) {
        self.records.clear();
    }

    /// Appends a scan, evicting the oldest one when full.
    pub fn push_scan(&mut self, mu: Bearing, t: u64) -> Result<()> {
        if let Some(last) = self.records.back() {
            if t < last.t {
                return Err(Error::Contract(format!(
                    "scan at step {t} is older than the newest stored scan at step {}",
                    last.t
                )));
            }
        }
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back(ScanRecord { mu, t });
        Ok(())
    }

    fn spread_at(&self, record: &ScanRecord, now: u64) -> f64 {
        let age = now.saturating_sub(record.t).min(i32::MAX as u64);
        self.sigma0 * (1.0 + self.gamma).powi(age as i32)
    }

    pub fn scan_value(&self, x: Bearing, now: u64) -> f64 {
        self.records
            .iter()
            .map(|rec| bivariate_scan_pdf(x, rec.mu, self.spread_at(rec, now)))
            .sum()
    }

    pub fn scaled_scan_value(&self, x: Bearing, now: u64) -> f64 {
        self.scan_value(x, now) / self.p_max_ref
    }

    /// Evaluates the SSV on an `size x size` grid over the field of regard.
    ///
    /// The Gaussian factorises per axis, so each scan costs `2 * size`
    /// exponentials and an outer product instead of `size^2` exponentials.
    pub fn rasterize(&self, now: u64, size: usize) -> Result<ScanRaster> {
        if size < 2 {
            return Err(Error::Domain(format!("raster size must be >= 2, got {size}")));
        }
        let axis = ScanRaster::axis(size);
        let mut values = vec![0.0; size * size];
        let mut fpsi = vec![0.0; size];
        let mut ftheta = vec![0.0; size];
        for rec in &self.records {
            let sigma = self.spread_at(rec, now);
            let norm = 1.0 / (2.0 * PI * sigma * sigma * self.p_max_ref);
            for (k, &v) in axis.iter().enumerate() {
                let a = (v - rec.mu.psi) / sigma;
                let b = (v - rec.mu.theta) / sigma;
                fpsi[k] = (-0.5 * a * a).exp();
                ftheta[k] = (-0.5 * b * b).exp();
            }
            for (i, row) in values.chunks_exact_mut(size).enumerate() {
                let wi = fpsi[i] * norm;
                if wi == 0.0 {
                    continue;
                }
                for (cell, &wj) in row.iter_mut().zip(&ftheta) {
                    *cell += wi * wj;
                }
            }
        }
        Ok(ScanRaster { size, values })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn history(capacity: usize, gamma: f64) -> ScanHistory {
        ScanHistory::new(capacity, 0.040072, gamma, 4).unwrap()
    }

    #[test]
    fn sigma0_examples() {
        assert_relative_eq!(
            sigma0_from_beamwidth(9f64.to_radians()).unwrap(),
            0.040072,
            epsilon = 1e-6
        );
        assert_relative_eq!(sigma0_from_beamwidth(3.92).unwrap(), 1.0);
        assert_relative_eq!(
            sigma0_from_beamwidth(1f64.to_radians()).unwrap(),
            0.004453,
            epsilon = 1e-6
        );
        assert!(sigma0_from_beamwidth(0.0).is_err());
        assert!(sigma0_from_beamwidth(-1.0).is_err());
    }

    #[test]
    fn gamma_examples() {
        assert_eq!(gamma_from_decay(1.0, 17).unwrap(), 0.0);
        // Oracle: 2^(1/200) - 1 and 100^(1/1200) - 1 evaluated directly.
        assert_relative_eq!(
            gamma_from_decay(0.5, 100).unwrap(),
            2f64.powf(1.0 / 200.0) - 1.0,
            max_relative = 1e-12
        );
        assert_relative_eq!(gamma_from_decay(0.5, 100).unwrap(), 3.4717e-3, epsilon = 1e-7);
        assert_relative_eq!(gamma_from_decay(0.01, 600).unwrap(), 3.845e-3, epsilon = 1e-6);
        assert!(gamma_from_decay(0.0, 10).is_err());
        assert!(gamma_from_decay(1.5, 10).is_err());
        assert!(gamma_from_decay(0.5, 0).is_err());
    }

    #[test]
    fn pdf_examples() {
        let mu = Bearing::new(0.1, -0.2);
        assert_relative_eq!(bivariate_scan_pdf(mu, mu, 1.0), 0.15915, epsilon = 1e-5);
        let off = Bearing::new(mu.psi + 0.3, mu.theta);
        assert_relative_eq!(
            bivariate_scan_pdf(off, mu, 0.3),
            bivariate_scan_pdf(mu, mu, 0.3) * (-0.5f64).exp(),
            max_relative = 1e-14
        );
        let s = 0.040072;
        assert_relative_eq!(bivariate_scan_pdf(mu, mu, s), 1.0 / (2.0 * PI * s * s), max_relative = 1e-14);
        assert_relative_eq!(bivariate_scan_pdf(mu, mu, s), 99.11, epsilon = 0.01);
    }

    #[test]
    fn p_max_examples() {
        let s0 = 0.040072;
        assert_relative_eq!(p_max(0, s0, 0.3), 1.0 / (2.0 * PI * s0 * s0), max_relative = 1e-15);
        assert_relative_eq!(p_max(4, 1.0, 0.0), 5.0 / (2.0 * PI), max_relative = 1e-15);
        // Oracle: the five terms summed with powf.
        let oracle: f64 = (0..=4)
            .map(|t| 1.0 / (2.0 * PI * s0 * s0 * 1.01f64.powf(2.0 * t as f64)))
            .sum();
        assert_relative_eq!(p_max(4, s0, 0.01), oracle, max_relative = 1e-12);
        assert_relative_eq!(oracle, 476.43, epsilon = 0.01);
    }

    #[test]
    fn fifo_eviction() {
        let mut h = history(3, 0.0);
        assert!(h.is_empty());
        h.push_scan(Bearing::new(0.0, 0.0), 0).unwrap();
        assert_eq!(h.len(), 1);
        h.push_scan(Bearing::new(0.1, 0.0), 1).unwrap();
        h.push_scan(Bearing::new(0.2, 0.0), 2).unwrap();
        let ts: Vec<u64> = h.records().map(|r| r.t).collect();
        assert_eq!(ts, vec![0, 1, 2]);
        h.push_scan(Bearing::new(0.3, 0.0), 3).unwrap();
        assert_eq!(h.len(), 3);
        assert_eq!(h.records().next().unwrap().t, 1);
        // equal timestamps are allowed, going backwards is not
        h.push_scan(Bearing::new(0.3, 0.0), 3).unwrap();
        assert!(matches!(
            h.push_scan(Bearing::new(0.3, 0.0), 2),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn scan_value_examples() {
        let mut h = history(8, 0.01);
        let mu = Bearing::new(0.2, 0.1);
        assert_eq!(h.scan_value(mu, 5), 0.0);
        assert_eq!(h.scaled_scan_value(mu, 5), 0.0);

        let peak = 1.0 / (2.0 * PI * h.sigma0() * h.sigma0());
        h.push_scan(mu, 0).unwrap();
        assert_relative_eq!(h.scan_value(mu, 0), peak, max_relative = 1e-14);
        h.push_scan(mu, 0).unwrap();
        assert_relative_eq!(h.scan_value(mu, 0), 2.0 * peak, max_relative = 1e-14);
    }

    #[test]
    fn ssv_fresh_scan_without_decay() {
        let mut h = history(8, 0.0);
        let mu = Bearing::new(-0.4, 0.3);
        h.push_scan(mu, 7).unwrap();
        assert_relative_eq!(h.scaled_scan_value(mu, 7), 0.2, max_relative = 1e-14);
        h.push_scan(mu, 7).unwrap();
        assert_relative_eq!(h.scaled_scan_value(mu, 7), 0.4, max_relative = 1e-14);
    }

    #[test]
    fn raster_examples() {
        let mut h = history(8, 0.01);
        let r = h.rasterize(0, 48).unwrap();
        assert!(r.values.iter().all(|&v| v == 0.0));
        assert!(h.rasterize(0, 1).is_err());

        h.push_scan(Bearing::new(0.0, 0.0), 0).unwrap();
        let r = h.rasterize(0, 48).unwrap();
        let (imax, _) = r
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap();
        let (i, j) = (imax / 48, imax % 48);
        assert!((23..=24).contains(&i) && (23..=24).contains(&j), "({i}, {j})");

        let corner = h.scaled_scan_value(Bearing::new(-FRAC_PI_3, -FRAC_PI_3), 0);
        assert_relative_eq!(r.get(0, 0), corner, max_relative = 1e-12);
    }

    #[test]
    fn raster_is_pointwise_evaluation() {
        let mut h = history(16, 0.02);
        for t in 0..16u64 {
            let mu = Bearing::new(-0.9 + 0.11 * t as f64, 0.7 - 0.09 * t as f64);
            h.push_scan(mu, t).unwrap();
        }
        let now = 20;
        let r = h.rasterize(now, 48).unwrap();
        let axis = ScanRaster::axis(48);
        for i in 0..48 {
            for j in 0..48 {
                let direct = h.scaled_scan_value(Bearing::new(axis[i], axis[j]), now);
                let cell = r.get(i, j);
                assert!(
                    (cell - direct).abs() <= 1e-12 * direct.abs() + 1e-250,
                    "cell ({i},{j}): {cell} vs {direct}"
                );
            }
        }
    }
}
