//! The episode engine.
//!
//! One call to [`Environment::step`] runs, in order: map the action to a
//! bearing, score the bearing against the scan field, push the scan,
//! propagate the truths, sense, run the tracker, score the covariance
//! change and build the next observation.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::action::{ActionGrid, BeamAction};
use crate::config::EpisodeConfig;
use crate::error::{Error, Result};
use crate::geometry::{Bearing, CartesianPosition};
use crate::metrics::gospa::{self, GospaResult};
use crate::mtt::{StepReport, TrackEstimate, Tracker};
use crate::observation::{build_observation, Observation};
use crate::policy::{Policy, PolicyContext};
use crate::rewards::{self, RewardBreakdown};
use crate::scan_history::{gamma_from_decay, sigma0_from_beamwidth, ScanHistory};
use crate::sim::{self, Detection, SensorModel, SensorRngs, TargetState};
use crate::trace::{returns, EpisodeTrace, StepRecord, TraceFooter, TraceHeader, TruthSnapshot};

/// Side information of one step. Carries ground truth; never feed it to a policy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub t: u64,
    pub action: BeamAction,
    pub bearing: Bearing,
    pub detections: Vec<Detection>,
    pub truths: Vec<TargetState>,
    pub report: StepReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    /// `None` when observations are switched off.
    pub observation: Option<Observation>,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub info: StepInfo,
}

#[derive(Debug)]
pub struct Environment {
    config: EpisodeConfig,
    grid: ActionGrid,
    sensor: SensorModel,
    history: ScanHistory,
    tracker: Tracker,
    targets: Vec<TargetState>,
    rngs: SensorRngs,
    seed: u64,
    steps_taken: u64,
    observe: bool,
}

impl Environment {
    /// Validates the config and resets to its seed.
    pub fn new(config: EpisodeConfig) -> Result<Self> {
        config.validate()?;
        let grid = ActionGrid::new(
            config.grid.field_of_regard_deg.to_radians(),
            config.sensor.beam_width(),
        )?;
        let sensor = SensorModel::from_config(&config.sensor, &config.spawn);
        let history = ScanHistory::new(
            config.scan.capacity,
            sigma0_from_beamwidth(config.sensor.beam_width())?,
            gamma_from_decay(config.scan.zeta, config.scan.decay_steps)?,
            config.scan.p_max_horizon,
        )?;
        let tracker = Tracker::new(config.tracker.clone(), config.dt, sensor.r_diag);
        let seed = config.seed;
        let mut env = Self {
            grid,
            sensor,
            history,
            tracker,
            targets: Vec::new(),
            rngs: SensorRngs::from_seed(seed),
            seed,
            steps_taken: 0,
            observe: true,
            config,
        };
        env.reset(None)?;
        Ok(env)
    }

    /// Starts a new episode. `None` reuses the seed of the current episode.
    pub fn reset(&mut self, seed: Option<u64>) -> Result<Observation> {
        if let Some(s) = seed {
            self.seed = s;
        }
        self.targets = sim::spawn_targets(self.config.n_targets, self.seed, &self.config.spawn)?;
        self.rngs = SensorRngs::from_seed(self.seed);
        self.tracker.reset();
        self.history.clear();
        self.steps_taken = 0;
        self.observation()
    }

    pub fn step(&mut self, action: BeamAction) -> Result<StepOutcome> {
        if self.is_done() {
            return Err(Error::Contract(format!(
                "step called after the episode finished at {} steps; call reset first",
                self.config.n_steps
            )));
        }
        let t = self.steps_taken;
        let bearing = self.grid.to_bearing(&action)?;
        let r_sv = rewards::search_reward(&self.history, bearing, t);
        self.history.push_scan(bearing, t)?;

        sim::propagate(&mut self.targets, self.config.dt)?;
        let detections = sim::sense(&self.targets, bearing, &self.sensor, t, &mut self.rngs);

        let before = self.tracker.tracks().to_vec();
        let report = self.tracker.step(&detections, t)?;
        let after = self.tracker.tracks();
        let detected = rewards::detected_track_ids(&before, after, t);
        let r_tl = rewards::track_reward(&before, after, &detected, self.config.reward.covariance_growth_sign);

        self.steps_taken += 1;
        let observation = if self.observe {
            Some(self.observation()?)
        } else {
            None
        };
        Ok(StepOutcome {
            observation,
            reward: rewards::total_reward(r_sv, r_tl),
            done: self.is_done(),
            info: StepInfo {
                t,
                action,
                bearing,
                detections,
                truths: self.targets.clone(),
                report,
            },
        })
    }

    /// Observation at the current time: the tracks and the scan field the
    /// next action will be scored against.
    pub fn observation(&self) -> Result<Observation> {
        build_observation(
            self.tracker.tracks(),
            &self.history,
            self.steps_taken,
            self.config.tracker.c_threshold,
            self.config.observation.overflow,
            self.config.scan.raster_size,
        )
    }

    /// Switches observation building in `step` on or off.
    pub fn set_observe(&mut self, observe: bool) {
        self.observe = observe;
    }

    pub fn config(&self) -> &EpisodeConfig {
        &self.config
    }

    pub fn grid(&self) -> &ActionGrid {
        &self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn steps_taken(&self) -> u64 {
        self.steps_taken
    }

    pub fn is_done(&self) -> bool {
        self.steps_taken >= self.config.n_steps
    }

    pub fn tracks(&self) -> &[TrackEstimate] {
        self.tracker.tracks()
    }

    pub fn targets(&self) -> &[TargetState] {
        &self.targets
    }

    pub fn history(&self) -> &ScanHistory {
        &self.history
    }
}

/// GOSPA of one step plus the `truth id -> track id` map used for switching.
pub fn score_step(
    truths: &[TargetState],
    tracks: &[TrackEstimate],
    cfg: &crate::config::GospaConfig,
) -> Result<(GospaResult, BTreeMap<u32, u64>)> {
    let x: Vec<CartesianPosition> = truths.iter().map(|t| t.position).collect();
    let y: Vec<CartesianPosition> = tracks.iter().map(|t| t.position()).collect();
    let out = gospa::gospa_assign(&x, &y, cfg)?;
    let map = out
        .pairs
        .iter()
        .map(|&(i, j)| (truths[i].id, tracks[j].track_id))
        .collect();
    Ok((out.result, map))
}

/// Runs one full episode at `config.seed` and records every step.
pub fn run_episode(config: &EpisodeConfig, policy: &mut dyn Policy) -> Result<EpisodeTrace> {
    let mut env = Environment::new(config.clone())?;
    policy.reset(config.seed)?;
    env.set_observe(policy.needs_observation());
    let mut observation = Some(env.observation()?);
    let switch_cost = config.gospa.switch_cost();
    let mut prev_assignment = BTreeMap::new();
    let mut switch_events = 0;
    let mut steps = Vec::with_capacity(config.n_steps as usize);

    while !env.is_done() {
        let ctx = PolicyContext {
            step: env.steps_taken(),
            grid: env.grid(),
            observation: observation.as_ref().filter(|_| policy.needs_observation()),
        };
        let action = policy.act(&ctx)?;
        let out = env.step(action)?;
        let (mut score, assignment) = score_step(&out.info.truths, env.tracks(), &config.gospa)?;
        let events = gospa::switch_events(&prev_assignment, &assignment);
        score.n_switches = events;
        score.switching = events as f64 * switch_cost;
        switch_events += events;
        steps.push(StepRecord {
            t: out.info.t,
            action,
            bearing: out.info.bearing,
            detections: out.info.detections,
            truths: out
                .info
                .truths
                .iter()
                .map(|t| TruthSnapshot {
                    id: t.id,
                    position: t.position,
                })
                .collect(),
            tracks: env.tracks().iter().map(TrackEstimate::snapshot).collect(),
            reward: out.reward,
            gospa: score,
            assignment: assignment.iter().map(|(&a, &b)| (a, b)).collect(),
        });
        prev_assignment = assignment;
        observation = out.observation;
    }

    let (episode_return, search_return, track_return) = returns(&steps);
    Ok(EpisodeTrace {
        header: TraceHeader::new(config, policy.name()),
        footer: TraceFooter {
            n_steps: steps.len() as u64,
            episode_return,
            search_return,
            track_return,
            switch_events,
        },
        steps,
    })
}
