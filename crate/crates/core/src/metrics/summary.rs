//! Per-episode summary statistics.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mtt::TrackSnapshot;
use crate::trace::{EpisodeTrace, StepRecord};

/// Linear-interpolation percentile of unsorted data, `q` in `[0, 100]`.
/// `None` for empty input.
pub fn percentile(data: &[f64], q: f64) -> Option<f64> {
    if data.is_empty() {
        return None;
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 100.0) / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

/// Mean, population standard deviation and 5th/95th percentiles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub p5: f64,
    pub p95: f64,
}

impl Stats {
    /// `None` for empty input.
    pub fn of(data: &[f64]) -> Option<Self> {
        let n = data.len();
        if n == 0 {
            return None;
        }
        let mean = data.iter().sum::<f64>() / n as f64;
        let var = data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        Some(Self {
            n,
            mean,
            std: var.sqrt(),
            p5: percentile(data, 5.0)?,
            p95: percentile(data, 95.0)?,
        })
    }
}

/// Mean Frobenius norm over the live tracks of one step; `None` when no
/// track is alive.
pub fn step_covariance(tracks: &[TrackSnapshot]) -> Option<f64> {
    if tracks.is_empty() {
        None
    } else {
        Some(tracks.iter().map(|t| t.cov_fro).sum::<f64>() / tracks.len() as f64)
    }
}

/// One summary row per episode. Flat so it maps onto a CSV row.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EpisodeSummary {
    pub policy: String,
    pub seed: u64,
    pub n_steps: u64,
    pub episode_return: f64,
    pub search_reward_mean: f64,
    pub search_reward_std: f64,
    pub search_reward_p5: f64,
    pub search_reward_p95: f64,
    /// Steps with at least one live track.
    pub cov_steps: usize,
    pub cov_mean: Option<f64>,
    pub cov_std: Option<f64>,
    pub cov_p5: Option<f64>,
    pub cov_p95: Option<f64>,
    pub gospa_distance: f64,
    pub gospa_localisation: f64,
    pub gospa_missed: f64,
    pub gospa_false: f64,
    pub gospa_switching: f64,
    pub switch_events: usize,
}

/// Summary of an arbitrary run of step records.
pub fn summarize_steps(policy: &str, seed: u64, steps: &[StepRecord]) -> EpisodeSummary {
    let search: Vec<f64> = steps.iter().map(|s| s.reward.r_sv).collect();
    let cov: Vec<f64> = steps.iter().filter_map(|s| step_covariance(&s.tracks)).collect();
    let search_stats = Stats::of(&search).unwrap_or_default();
    let cov_stats = Stats::of(&cov);
    let sum = |f: fn(&StepRecord) -> f64| steps.iter().map(f).sum::<f64>();
    EpisodeSummary {
        policy: policy.to_owned(),
        seed,
        n_steps: steps.len() as u64,
        episode_return: sum(|s| s.reward.r_total),
        search_reward_mean: search_stats.mean,
        search_reward_std: search_stats.std,
        search_reward_p5: search_stats.p5,
        search_reward_p95: search_stats.p95,
        cov_steps: cov.len(),
        cov_mean: cov_stats.map(|s| s.mean),
        cov_std: cov_stats.map(|s| s.std),
        cov_p5: cov_stats.map(|s| s.p5),
        cov_p95: cov_stats.map(|s| s.p95),
        gospa_distance: sum(|s| s.gospa.distance),
        gospa_localisation: sum(|s| s.gospa.localisation),
        gospa_missed: sum(|s| s.gospa.missed),
        gospa_false: sum(|s| s.gospa.false_comp),
        gospa_switching: sum(|s| s.gospa.switching),
        switch_events: steps.iter().map(|s| s.gospa.n_switches).sum(),
    }
}

/// Summary of a complete, verified trace.
pub fn episode_summary(trace: &EpisodeTrace) -> Result<EpisodeSummary> {
    trace.verify()?;
    Ok(summarize_steps(&trace.header.policy, trace.header.seed, &trace.steps))
}

pub fn write_csv<W: Write>(rows: &[EpisodeSummary], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_csv<R: std::io::Read>(r: R) -> Result<Vec<EpisodeSummary>> {
    let mut rdr = csv::Reader::from_reader(r);
    rdr.deserialize().map(|row| row.map_err(Into::into)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_matches_hand_values() {
        let d = [3.0, 1.0, 2.0, 4.0, 5.0];
        assert_eq!(percentile(&d, 0.0), Some(1.0));
        assert_eq!(percentile(&d, 50.0), Some(3.0));
        assert_eq!(percentile(&d, 100.0), Some(5.0));
        // position 0.05 * 4 = 0.2 between 1 and 2
        assert_eq!(percentile(&d, 5.0), Some(1.2));
        assert_eq!(percentile(&[], 5.0), None);
        assert_eq!(percentile(&[7.0], 95.0), Some(7.0));
    }

    #[test]
    fn constant_series() {
        let s = Stats::of(&[2.5; 40]).unwrap();
        assert_eq!((s.mean, s.std, s.p5, s.p95), (2.5, 0.0, 2.5, 2.5));
        assert!(Stats::of(&[]).is_none());
    }
}
