//! Episode traces: one JSON object per line, a header first, one record per
//! step, and a footer carrying the episode totals.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::action::BeamAction;
use crate::config::EpisodeConfig;
use crate::error::{Error, Result};
use crate::geometry::{Bearing, CartesianPosition};
use crate::metrics::gospa::GospaResult;
use crate::mtt::TrackSnapshot;
use crate::rewards::RewardBreakdown;
use crate::sim::Detection;

pub const TRACE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub version: u32,
    pub engine: String,
    pub policy: String,
    pub seed: u64,
    pub config_hash: String,
    pub config: EpisodeConfig,
}

impl TraceHeader {
    pub fn new(config: &EpisodeConfig, policy: &str) -> Self {
        Self {
            version: TRACE_VERSION,
            engine: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            policy: policy.to_owned(),
            seed: config.seed,
            config_hash: config.hash(),
            config: config.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthSnapshot {
    pub id: u32,
    pub position: CartesianPosition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: u64,
    pub action: BeamAction,
    pub bearing: Bearing,
    pub detections: Vec<Detection>,
    pub truths: Vec<TruthSnapshot>,
    pub tracks: Vec<TrackSnapshot>,
    pub reward: RewardBreakdown,
    pub gospa: GospaResult,
    /// `(truth id, track id)` pairs closer than the GOSPA cut-off.
    pub assignment: Vec<(u32, u64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceFooter {
    pub n_steps: u64,
    pub episode_return: f64,
    pub search_return: f64,
    pub track_return: f64,
    pub switch_events: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TraceLine {
    Header(TraceHeader),
    Step(StepRecord),
    Footer(TraceFooter),
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeTrace {
    pub header: TraceHeader,
    pub steps: Vec<StepRecord>,
    pub footer: TraceFooter,
}

/// Per-step totals accumulated in step order.
pub fn returns(steps: &[StepRecord]) -> (f64, f64, f64) {
    steps.iter().fold((0.0, 0.0, 0.0), |(total, sv, tl), s| {
        (total + s.reward.r_total, sv + s.reward.r_sv, tl + s.reward.r_tl)
    })
}

impl EpisodeTrace {
    /// Checks length, config hash, reward decomposition and footer totals.
    pub fn verify(&self) -> Result<()> {
        let h = &self.header;
        if h.config.hash() != h.config_hash {
            return Err(Error::Integrity("config hash does not match the config echo".into()));
        }
        let n = h.config.n_steps;
        if self.steps.len() as u64 != n || self.footer.n_steps != n {
            return Err(Error::Integrity(format!(
                "trace has {} step records and footer n_steps {}, config asks for {n}",
                self.steps.len(),
                self.footer.n_steps
            )));
        }
        for (k, s) in self.steps.iter().enumerate() {
            if s.t != k as u64 {
                return Err(Error::Integrity(format!("record {k} carries t = {}", s.t)));
            }
            if s.reward.r_total != s.reward.r_sv + s.reward.r_tl {
                return Err(Error::Integrity(format!("reward components do not sum at t = {k}")));
            }
        }
        let switches: usize = self.steps.iter().map(|s| s.gospa.n_switches).sum();
        if switches != self.footer.switch_events {
            return Err(Error::Integrity(format!(
                "footer counts {} switch events, steps carry {switches}",
                self.footer.switch_events
            )));
        }
        let (total, sv, tl) = returns(&self.steps);
        let f = &self.footer;
        if (total, sv, tl) != (f.episode_return, f.search_return, f.track_return) {
            return Err(Error::Integrity(format!(
                "footer return {} differs from the step sum {total}",
                f.episode_return
            )));
        }
        Ok(())
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let mut line = |item: &TraceLine| -> Result<()> {
            serde_json::to_writer(&mut w, item)?;
            w.write_all(b"\n")?;
            Ok(())
        };
        line(&TraceLine::Header(self.header.clone()))?;
        for s in &self.steps {
            line(&TraceLine::Step(s.clone()))?;
        }
        line(&TraceLine::Footer(self.footer.clone()))?;
        w.flush()?;
        Ok(())
    }

    pub fn to_jsonl_bytes(&self) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        self.write_jsonl(&mut out)?;
        Ok(out)
    }

    /// Parses and verifies a trace.
    pub fn read_jsonl<R: BufRead>(r: R) -> Result<Self> {
        let mut header = None;
        let mut footer = None;
        let mut steps = Vec::new();
        for (no, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            if footer.is_some() {
                return Err(Error::Integrity(format!("line {} follows the footer", no + 1)));
            }
            match serde_json::from_str::<TraceLine>(&line)? {
                TraceLine::Header(h) if header.is_none() && no == 0 => header = Some(h),
                TraceLine::Header(_) => {
                    return Err(Error::Integrity(format!("unexpected header on line {}", no + 1)))
                }
                TraceLine::Step(_) if header.is_none() => {
                    return Err(Error::Integrity("trace does not start with a header".into()))
                }
                TraceLine::Step(s) => steps.push(s),
                TraceLine::Footer(f) => footer = Some(f),
            }
        }
        let header = header.ok_or_else(|| Error::Integrity("trace has no header".into()))?;
        let footer = footer.ok_or_else(|| Error::Integrity("trace has no footer".into()))?;
        let trace = Self {
            header,
            steps,
            footer,
        };
        trace.verify()?;
        Ok(trace)
    }
}
