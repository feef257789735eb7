//! GOSPA distance between a set of true and a set of estimated positions.
//!
//! All components are reported in the `p`-th power domain, so that
//! `distance^p = localisation + missed + false_comp` at every step. The
//! switching component is a separate per-step term computed from the
//! assignments of two consecutive steps.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::config::GospaConfig;
use crate::error::{Error, Result};
use crate::geometry::CartesianPosition;
use crate::mtt::assignment;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GospaResult {
    pub distance: f64,
    pub localisation: f64,
    pub missed: f64,
    pub false_comp: f64,
    pub switching: f64,
    pub n_missed: usize,
    pub n_false: usize,
    /// Switch events behind `switching`.
    pub n_switches: usize,
}

/// GOSPA result plus the `(truth index, estimate index)` pairs closer than `c`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GospaAssignment {
    pub result: GospaResult,
    pub pairs: Vec<(usize, usize)>,
}

pub fn validate(cfg: &GospaConfig) -> Result<()> {
    if !(cfg.c > 0.0 && cfg.c.is_finite()) {
        return Err(Error::config("gospa.c", format!("must be positive, got {}", cfg.c)));
    }
    if !(cfg.p >= 1.0 && cfg.p.is_finite()) {
        return Err(Error::config("gospa.p", format!("must be at least 1, got {}", cfg.p)));
    }
    if cfg.alpha != 2.0 {
        return Err(Error::config(
            "gospa.alpha",
            format!("only alpha = 2 admits the missed/false decomposition, got {}", cfg.alpha),
        ));
    }
    if let Some(w) = cfg.switching_weight {
        if !(w >= 0.0 && w.is_finite()) {
            return Err(Error::config(
                "gospa.switching_weight",
                format!("must be non-negative, got {w}"),
            ));
        }
    }
    Ok(())
}

pub fn gospa(
    truths: &[CartesianPosition],
    estimates: &[CartesianPosition],
    cfg: &GospaConfig,
) -> Result<GospaResult> {
    Ok(gospa_assign(truths, estimates, cfg)?.result)
}

/// Optimal assignment under the cost `min(d, c)^p`; pairs at or beyond `c`
/// are reported as one missed truth plus one false estimate.
pub fn gospa_assign(
    truths: &[CartesianPosition],
    estimates: &[CartesianPosition],
    cfg: &GospaConfig,
) -> Result<GospaAssignment> {
    validate(cfg)?;
    let cp = cfg.c.powf(cfg.p);
    let dist = DMatrix::from_fn(truths.len(), estimates.len(), |i, j| {
        truths[i].distance(&estimates[j])
    });
    if dist.iter().any(|d| !d.is_finite()) {
        return Err(Error::Domain("GOSPA inputs must be finite".into()));
    }
    let cost = dist.map(|d| d.min(cfg.c).powf(cfg.p));
    let by_row = assignment::solve(&cost);

    let mut pairs = Vec::new();
    let mut localisation = 0.0;
    for (i, j) in by_row.into_iter().enumerate() {
        if let Some(j) = j {
            if dist[(i, j)] < cfg.c {
                localisation += cost[(i, j)];
                pairs.push((i, j));
            }
        }
    }
    let n_missed = truths.len() - pairs.len();
    let n_false = estimates.len() - pairs.len();
    let missed = cp / cfg.alpha * n_missed as f64;
    let false_comp = cp / cfg.alpha * n_false as f64;
    let distance = (localisation + missed + false_comp).powf(1.0 / cfg.p);
    Ok(GospaAssignment {
        result: GospaResult {
            distance,
            localisation,
            missed,
            false_comp,
            switching: 0.0,
            n_missed,
            n_false,
            n_switches: 0,
        },
        pairs,
    })
}

/// Number of truths assigned at both steps but to different estimate ids.
pub fn switch_events<T: Ord, E: PartialEq>(prev: &BTreeMap<T, E>, now: &BTreeMap<T, E>) -> usize {
    now.iter()
        .filter(|(truth, est)| prev.get(truth).is_some_and(|p| p != *est))
        .count()
}

/// Switching cost over a whole assignment history: events between every
/// pair of consecutive steps, times `weight`.
pub fn gospa_switching<T: Ord, E: PartialEq>(history: &[BTreeMap<T, E>], weight: f64) -> (usize, f64) {
    let events: usize = history
        .windows(2)
        .map(|w| switch_events(&w[0], &w[1]))
        .sum();
    (events, events as f64 * weight)
}
