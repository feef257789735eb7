//! Line-oriented JSON protocol that exposes one [`Environment`] to another
//! process: one request object per line in, one response object per line out.
//!
//! Requests are `{"op": "reset", "seed": 7}` (seed optional),
//! `{"op": "step", "action": [a_psi, a_theta]}`, `{"op": "spaces"}` and
//! `{"op": "close"}`. Every response carries `"ok"`; failures carry an
//! `"error"` object with a machine-readable `kind`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::action::BeamAction;
use crate::config::EpisodeConfig;
use crate::env::{score_step, Environment};
use crate::error::{Error, Result};
use crate::geometry::{Bearing, CartesianPosition};
use crate::metrics::gospa::GospaResult;
use crate::observation::{Observation, MAX_TRACKS, TRACK_FEATURES};
use crate::rewards::RewardBreakdown;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum Request {
    Reset {
        #[serde(default)]
        seed: Option<u64>,
    },
    Step {
        action: BeamAction,
    },
    // braces so that unknown fields are rejected here too
    Spaces {},
    Close {},
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spaces {
    pub track_matrix: [usize; 2],
    pub scan_raster: [usize; 3],
    pub dtype: String,
    /// Multi-discrete action space: one size per axis.
    pub action: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireTruth {
    pub id: u32,
    pub position: CartesianPosition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireTrack {
    pub id: u64,
    pub position: CartesianPosition,
    pub cov_fro: f64,
}

/// Diagnostics of one step. Contains ground truth, so an agent must not
/// read it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireInfo {
    pub t: u64,
    pub bearing: Bearing,
    pub n_detections: usize,
    pub truths: Vec<WireTruth>,
    pub tracks: Vec<WireTrack>,
    /// `(truth id, track id)` pairs from the GOSPA assignment.
    pub assignment: Vec<(u32, u64)>,
    pub gospa: GospaResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WireError {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Response {
    // Step precedes Reset: untagged decoding takes the first variant that fits.
    Step {
        ok: bool,
        observation: Observation,
        reward: RewardBreakdown,
        done: bool,
        info: WireInfo,
    },
    Reset {
        ok: bool,
        observation: Observation,
    },
    Spaces {
        ok: bool,
        spaces: Spaces,
    },
    Closed {
        ok: bool,
        closed: bool,
    },
    Error {
        ok: bool,
        error: WireError,
    },
}

impl Response {
    fn error(e: &Error) -> Self {
        let kind = match e {
            Error::Domain(_) => "domain",
            Error::Config { .. } => "config",
            Error::Contract(_) => "contract",
            Error::Numerical(_) => "numerical",
            Error::Integrity(_) => "integrity",
            Error::Io(_) => "io",
            Error::Json(_) => "request",
            Error::Csv(_) => "io",
        };
        Response::Error {
            ok: false,
            error: WireError {
                kind: kind.into(),
                message: e.to_string(),
            },
        }
    }
}

/// One environment behind the protocol. After `close` every request fails.
#[derive(Debug)]
pub struct WireSession {
    env: Environment,
    closed: bool,
}

impl WireSession {
    pub fn new(config: EpisodeConfig) -> Result<Self> {
        Ok(Self {
            env: Environment::new(config)?,
            closed: false,
        })
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn spaces(&self) -> Spaces {
        let n = self.env.config().scan.raster_size;
        Spaces {
            track_matrix: [MAX_TRACKS, TRACK_FEATURES],
            scan_raster: [1, n, n],
            dtype: "float32".into(),
            action: [self.env.grid().size(); 2],
        }
    }

    pub fn handle(&mut self, request: &Request) -> Response {
        self.try_handle(request).unwrap_or_else(|e| Response::error(&e))
    }

    /// Parses one request line and answers it; malformed input yields an
    /// error response rather than a failure.
    pub fn handle_line(&mut self, line: &str) -> Response {
        match serde_json::from_str::<Request>(line) {
            Ok(req) => self.handle(&req),
            Err(e) => Response::error(&e.into()),
        }
    }

    fn try_handle(&mut self, request: &Request) -> Result<Response> {
        if self.closed {
            return Err(Error::Contract("session is closed".into()));
        }
        Ok(match request {
            Request::Reset { seed } => Response::Reset {
                ok: true,
                observation: self.env.reset(*seed)?,
            },
            Request::Step { action } => {
                let out = self.env.step(*action)?;
                let observation = out
                    .observation
                    .ok_or_else(|| Error::Contract("observations are switched off".into()))?;
                let tracks = self.env.tracks();
                let (gospa, assignment) = score_step(&out.info.truths, tracks, &self.env.config().gospa)?;
                Response::Step {
                    ok: true,
                    observation,
                    reward: out.reward,
                    done: out.done,
                    info: WireInfo {
                        t: out.info.t,
                        bearing: out.info.bearing,
                        n_detections: out.info.detections.len(),
                        truths: out
                            .info
                            .truths
                            .iter()
                            .map(|t| WireTruth {
                                id: t.id,
                                position: t.position,
                            })
                            .collect(),
                        tracks: tracks
                            .iter()
                            .map(|t| WireTrack {
                                id: t.track_id,
                                position: t.position(),
                                cov_fro: t.cov_norm(),
                            })
                            .collect(),
                        assignment: assignment.into_iter().collect(),
                        gospa,
                    },
                }
            }
            Request::Spaces {} => Response::Spaces {
                ok: true,
                spaces: self.spaces(),
            },
            Request::Close {} => {
                self.closed = true;
                Response::Closed {
                    ok: true,
                    closed: true,
                }
            }
        })
    }
}

/// Answers requests from `input` until `close` or end of input.
pub fn serve<R: BufRead, W: Write>(config: EpisodeConfig, input: R, mut output: W) -> Result<()> {
    let mut session = WireSession::new(config)?;
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let response = session.handle_line(&line);
        serde_json::to_writer(&mut output, &response)?;
        output.write_all(b"\n")?;
        output.flush()?;
        if session.is_closed() {
            break;
        }
    }
    Ok(())
}
