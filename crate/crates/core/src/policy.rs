//! Beam-scheduling policies.

use std::io::{BufRead, Write};

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::action::{ActionGrid, BeamAction};
use crate::error::{Error, Result};
use crate::observation::Observation;
use crate::rng::{self, Stream};

/// What a policy sees before choosing the action for step `step`.
pub struct PolicyContext<'a> {
    pub step: u64,
    pub grid: &'a ActionGrid,
    /// Present only when the policy asked for observations.
    pub observation: Option<&'a Observation>,
}

pub trait Policy {
    fn name(&self) -> &str;

    /// Called at the start of every episode with the episode seed.
    fn reset(&mut self, seed: u64) -> Result<()>;

    fn act(&mut self, ctx: &PolicyContext<'_>) -> Result<BeamAction>;

    /// Whether `act` reads `ctx.observation`. The engine skips rasterising
    /// the scan field for policies that do not.
    fn needs_observation(&self) -> bool {
        false
    }
}

/// Samples one action uniformly at the first step and holds it.
#[derive(Clone, Debug)]
pub struct StaticPolicy {
    rng: ChaCha8Rng,
    held: Option<BeamAction>,
}

impl StaticPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, Stream::Policy),
            held: None,
        }
    }
}

impl Policy for StaticPolicy {
    fn name(&self) -> &str {
        "static"
    }

    fn reset(&mut self, seed: u64) -> Result<()> {
        *self = Self::new(seed);
        Ok(())
    }

    fn act(&mut self, ctx: &PolicyContext<'_>) -> Result<BeamAction> {
        let rng = &mut self.rng;
        Ok(*self.held.get_or_insert_with(|| ctx.grid.sample_uniform(rng)))
    }
}

/// Independent uniform action at every step.
#[derive(Clone, Debug)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
}

impl RandomPolicy {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::stream(seed, Stream::Policy),
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn reset(&mut self, seed: u64) -> Result<()> {
        *self = Self::new(seed);
        Ok(())
    }

    fn act(&mut self, ctx: &PolicyContext<'_>) -> Result<BeamAction> {
        Ok(ctx.grid.sample_uniform(&mut self.rng))
    }
}

/// Row-major raster: `(k mod N_a, (k div N_a) mod N_a)` at step `k`.
#[derive(Clone, Debug, Default)]
pub struct CoveragePolicy;

pub fn coverage_action(step: u64, grid_size: usize) -> BeamAction {
    let n = grid_size as u64;
    BeamAction::new((step % n) as u32, ((step / n) % n) as u32)
}

impl Policy for CoveragePolicy {
    fn name(&self) -> &str {
        "coverage"
    }

    fn reset(&mut self, _seed: u64) -> Result<()> {
        Ok(())
    }

    fn act(&mut self, ctx: &PolicyContext<'_>) -> Result<BeamAction> {
        Ok(coverage_action(ctx.step, ctx.grid.size()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    Static,
    Random,
    Coverage,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Static, PolicyKind::Random, PolicyKind::Coverage];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Static => "static",
            PolicyKind::Random => "random",
            PolicyKind::Coverage => "coverage",
        }
    }

    pub fn build(self, seed: u64) -> Box<dyn Policy + Send> {
        match self {
            PolicyKind::Static => Box::new(StaticPolicy::new(seed)),
            PolicyKind::Random => Box::new(RandomPolicy::new(seed)),
            PolicyKind::Coverage => Box::new(CoveragePolicy),
        }
    }
}

impl std::str::FromStr for PolicyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown policy `{s}`")))
    }
}

/// Request line written to an external agent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionRequest {
    pub step: u64,
    pub grid_size: usize,
    pub observation: Option<Observation>,
}

/// Reply line expected from an external agent.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ActionReply {
    pub action: BeamAction,
}

/// Delegates every decision to another process over JSON lines: one
/// [`ActionRequest`] out, one [`ActionReply`] back.
pub struct ExternalPolicy<R, W> {
    reader: R,
    writer: W,
    line: String,
}

impl<R: BufRead, W: Write> ExternalPolicy<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self {
            reader,
            writer,
            line: String::new(),
        }
    }
}

impl<R: BufRead, W: Write> Policy for ExternalPolicy<R, W> {
    fn name(&self) -> &str {
        "external"
    }

    fn reset(&mut self, _seed: u64) -> Result<()> {
        Ok(())
    }

    fn act(&mut self, ctx: &PolicyContext<'_>) -> Result<BeamAction> {
        let request = ActionRequest {
            step: ctx.step,
            grid_size: ctx.grid.size(),
            observation: ctx.observation.cloned(),
        };
        serde_json::to_writer(&mut self.writer, &request)?;
        self.writer.write_all(b"\n")?;
        self.writer.flush()?;

        self.line.clear();
        if self.reader.read_line(&mut self.line)? == 0 {
            return Err(Error::Contract("external policy closed its output".into()));
        }
        let reply: ActionReply = serde_json::from_str(self.line.trim_end())?;
        if !ctx.grid.contains(&reply.action) {
            return Err(Error::Contract(format!(
                "external policy returned {:?} outside the {n}x{n} grid",
                reply.action,
                n = ctx.grid.size()
            )));
        }
        Ok(reply.action)
    }

    fn needs_observation(&self) -> bool {
        true
    }
}
