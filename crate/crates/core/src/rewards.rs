//! Per-step search and tracking rewards.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::geometry::Bearing;
use crate::mtt::TrackEstimate;
use crate::scan_history::ScanHistory;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub r_sv: f64,
    pub r_tl: f64,
    pub r_total: f64,
}

/// Negative SSV at the commanded beam. Call before the beam's own scan is pushed.
pub fn search_reward(history: &ScanHistory, beam: Bearing, now: u64) -> f64 {
    -history.scaled_scan_value(beam, now)
}

/// Covariance-norm change summed over the tracks in `detected_ids` that
/// exist in both lists.
///
/// With `growth_sign == false` the term is `|P_prev| - |P_post|`, positive
/// when a track tightens; `true` flips it to `|P_post| - |P_prev|`.
pub fn track_reward(
    tracks_prev: &[TrackEstimate],
    tracks_post: &[TrackEstimate],
    detected_ids: &HashSet<u64>,
    growth_sign: bool,
) -> f64 {
    let prev: HashMap<u64, f64> = tracks_prev
        .iter()
        .map(|t| (t.track_id, t.cov_norm()))
        .collect();
    let mut ids: Vec<u64> = detected_ids.iter().copied().collect();
    ids.sort_unstable();
    let post: HashMap<u64, f64> = tracks_post
        .iter()
        .map(|t| (t.track_id, t.cov_norm()))
        .collect();
    let sign = if growth_sign { -1.0 } else { 1.0 };
    ids.into_iter()
        .filter_map(|id| Some(sign * (prev.get(&id)? - post.get(&id)?)))
        .sum()
}

/// Ids of tracks detected at step `t` (in `tracks_post`) or `t - 1` (in `tracks_prev`).
pub fn detected_track_ids(
    tracks_prev: &[TrackEstimate],
    tracks_post: &[TrackEstimate],
    t: u64,
) -> HashSet<u64> {
    let now = tracks_post
        .iter()
        .filter(|tr| tr.last_detected == Some(t))
        .map(|tr| tr.track_id);
    let before = tracks_prev
        .iter()
        .filter(|tr| t > 0 && tr.last_detected == Some(t - 1))
        .map(|tr| tr.track_id);
    now.chain(before).collect()
}

pub fn total_reward(r_sv: f64, r_tl: f64) -> RewardBreakdown {
    RewardBreakdown {
        r_sv,
        r_tl,
        r_total: r_sv + r_tl,
    }
}
