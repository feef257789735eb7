//! Episode configuration.
//!
//! Every tunable of an episode lives here. The JSON form rejects unknown keys
//! and every parse or validation failure reports the dotted path of the
//! offending field.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpisodeConfig {
    /// Master seed; split into independent named streams.
    pub seed: u64,
    /// Simulation step in seconds.
    pub dt: f64,
    pub n_steps: u64,
    pub n_targets: usize,
    pub sensor: SensorConfig,
    pub tracker: TrackerConfig,
    pub scan: ScanConfig,
    pub grid: GridConfig,
    pub spawn: SpawnConfig,
    pub gospa: GospaConfig,
    pub reward: RewardConfig,
    pub observation: ObservationConfig,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            dt: 0.05,
            n_steps: 1200,
            n_targets: 10,
            sensor: SensorConfig::default(),
            tracker: TrackerConfig::default(),
            scan: ScanConfig::default(),
            grid: GridConfig::default(),
            spawn: SpawnConfig::default(),
            gospa: GospaConfig::default(),
            reward: RewardConfig::default(),
            observation: ObservationConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// Total beam width in degrees; detection inside half of it.
    pub beam_width_deg: f64,
    /// Measurement noise standard deviations: azimuth (rad), elevation (rad), range (m).
    pub sigma_psi: f64,
    pub sigma_theta: f64,
    pub sigma_r: f64,
    /// Probability of detecting an in-beam target.
    pub p_detect: f64,
    /// Mean number of false alarms per dwell (Poisson).
    pub clutter_rate: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            beam_width_deg: 9.0,
            sigma_psi: 1e-3,
            sigma_theta: 1e-3,
            sigma_r: 5.0,
            p_detect: 1.0,
            clutter_rate: 0.0,
        }
    }
}

impl SensorConfig {
    pub fn beam_width(&self) -> f64 {
        self.beam_width_deg.to_radians()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeletionPolicy {
    /// Only tracks that went without a detection this step may be deleted.
    Coasting,
    /// Any track above the threshold is deleted, detected or not.
    All,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UkfConfig {
    pub alpha: f64,
    pub beta: f64,
    pub kappa: f64,
}

impl Default for UkfConfig {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 2.0,
            kappa: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Process noise intensity of the constant-velocity model, m^2/s^3.
    pub q_tilde: f64,
    /// Mahalanobis gate on the 3-D innovation.
    pub gate: f64,
    /// Frobenius-norm deletion bound; also the covariance normaliser of observations.
    pub c_threshold: f64,
    pub deletion: DeletionPolicy,
    pub ukf: UkfConfig,
    /// Initial per-axis velocity variance of a new track, (m/s)^2.
    pub init_vel_var: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            q_tilde: 1.0,
            gate: 11.34f64.sqrt(),
            c_threshold: 2500.0,
            deletion: DeletionPolicy::Coasting,
            ukf: UkfConfig::default(),
            init_vel_var: 100.0 * 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// FIFO capacity `N_SV`.
    pub capacity: usize,
    /// Peak ratio reached after `decay_steps`.
    pub zeta: f64,
    pub decay_steps: u64,
    /// Horizon of the normalising constant `p_max`.
    pub p_max_horizon: u64,
    /// Side length of the observation raster.
    pub raster_size: usize,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            capacity: 64,
            zeta: 0.01,
            decay_steps: 600,
            p_max_horizon: 4,
            raster_size: 48,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    /// Total field of regard per axis in degrees.
    pub field_of_regard_deg: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            field_of_regard_deg: 120.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpawnConfig {
    pub range_min: f64,
    pub range_max: f64,
    pub speed_min: f64,
    pub speed_max: f64,
}

impl Default for SpawnConfig {
    fn default() -> Self {
        Self {
            range_min: 20_000.0,
            range_max: 90_000.0,
            speed_min: 10.0,
            speed_max: 100.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GospaConfig {
    /// Cut-off distance in metres.
    pub c: f64,
    /// Order of the metric.
    pub p: f64,
    pub alpha: f64,
    /// Cost of one track switch; `c^p / 2` when absent.
    pub switching_weight: Option<f64>,
}

impl Default for GospaConfig {
    fn default() -> Self {
        Self {
            c: 500.0,
            p: 1.0,
            alpha: 2.0,
            switching_weight: None,
        }
    }
}

impl GospaConfig {
    pub fn switch_cost(&self) -> f64 {
        self.switching_weight
            .unwrap_or_else(|| self.c.powf(self.p) / 2.0)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardConfig {
    /// Use `||P_t|| - ||P_t-1||` (rewarding covariance growth) instead of the reduction.
    pub covariance_growth_sign: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowPolicy {
    /// Keep the tracks with the smallest covariance norm.
    #[default]
    LowestCovariance,
    /// Keep the tracks with the smallest ids.
    FirstById,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObservationConfig {
    pub overflow: OverflowPolicy,
}

fn check(ok: bool, path: &str, message: impl FnOnce() -> String) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(path, message()))
    }
}

fn positive(v: f64, path: &str) -> Result<()> {
    check(v > 0.0 && v.is_finite(), path, || {
        format!("must be positive and finite, got {v}")
    })
}

fn non_negative(v: f64, path: &str) -> Result<()> {
    check(v >= 0.0 && v.is_finite(), path, || {
        format!("must be non-negative and finite, got {v}")
    })
}

impl EpisodeConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(s);
        let cfg: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::config(path, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serialises")
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        positive(self.dt, "dt")?;
        check(self.n_steps > 0, "n_steps", || "must be at least 1".into())?;

        let s = &self.sensor;
        positive(s.beam_width_deg, "sensor.beam_width_deg")?;
        check(s.beam_width_deg < 180.0, "sensor.beam_width_deg", || {
            format!("must be below 180 degrees, got {}", s.beam_width_deg)
        })?;
        non_negative(s.sigma_psi, "sensor.sigma_psi")?;
        non_negative(s.sigma_theta, "sensor.sigma_theta")?;
        non_negative(s.sigma_r, "sensor.sigma_r")?;
        check((0.0..=1.0).contains(&s.p_detect), "sensor.p_detect", || {
            format!("must lie in [0, 1], got {}", s.p_detect)
        })?;
        non_negative(s.clutter_rate, "sensor.clutter_rate")?;

        let t = &self.tracker;
        non_negative(t.q_tilde, "tracker.q_tilde")?;
        positive(t.gate, "tracker.gate")?;
        positive(t.c_threshold, "tracker.c_threshold")?;
        positive(t.ukf.alpha, "tracker.ukf.alpha")?;
        check(t.ukf.beta.is_finite(), "tracker.ukf.beta", || "must be finite".into())?;
        check(
            t.ukf.kappa.is_finite() && 3.0 + t.ukf.kappa > 0.0,
            "tracker.ukf.kappa",
            || format!("must satisfy n + kappa > 0, got {}", t.ukf.kappa),
        )?;
        positive(t.init_vel_var, "tracker.init_vel_var")?;

        let sc = &self.scan;
        check(sc.capacity > 0, "scan.capacity", || "must be at least 1".into())?;
        check(sc.zeta > 0.0 && sc.zeta <= 1.0, "scan.zeta", || {
            format!("must lie in (0, 1], got {}", sc.zeta)
        })?;
        check(sc.decay_steps > 0, "scan.decay_steps", || "must be at least 1".into())?;
        check(sc.raster_size >= 2, "scan.raster_size", || "must be at least 2".into())?;

        positive(self.grid.field_of_regard_deg, "grid.field_of_regard_deg")?;
        check(
            self.grid.field_of_regard_deg <= 180.0,
            "grid.field_of_regard_deg",
            || "must not exceed 180 degrees".into(),
        )?;
        let n_a = crate::action::grid_size(
            self.grid.field_of_regard_deg.to_radians(),
            self.sensor.beam_width(),
        );
        check(matches!(n_a, Ok(n) if n >= 2), "grid.field_of_regard_deg", || {
            "field of regard too small for the beam: fewer than 2 actions per axis".into()
        })?;

        let sp = &self.spawn;
        positive(sp.range_min, "spawn.range_min")?;
        check(
            sp.range_max.is_finite() && sp.range_max >= sp.range_min,
            "spawn.range_max",
            || format!("must be >= range_min, got {}", sp.range_max),
        )?;
        non_negative(sp.speed_min, "spawn.speed_min")?;
        check(
            sp.speed_max.is_finite() && sp.speed_max >= sp.speed_min,
            "spawn.speed_max",
            || format!("must be >= speed_min, got {}", sp.speed_max),
        )?;

        let g = &self.gospa;
        positive(g.c, "gospa.c")?;
        check(g.p >= 1.0 && g.p.is_finite(), "gospa.p", || {
            format!("must be >= 1, got {}", g.p)
        })?;
        check(g.alpha == 2.0, "gospa.alpha", || {
            format!("only alpha = 2 supports the missed/false decomposition, got {}", g.alpha)
        })?;
        if let Some(w) = g.switching_weight {
            non_negative(w, "gospa.switching_weight")?;
        }
        Ok(())
    }
}
