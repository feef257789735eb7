//! Behaviour-cloning dataset of `(observation, action)` pairs.
//!
//! Layout: the magic `BCDS`, a little-endian `u32` header length, the JSON
//! header, then fixed-size little-endian records of the track matrix
//! (`f32`), the scan raster (`f32`) and the action pair (`i32`).

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::action::BeamAction;
use crate::config::EpisodeConfig;
use crate::env::Environment;
use crate::error::{Error, Result};
use crate::observation::{Observation, MAX_TRACKS, TRACK_FEATURES};
use crate::policy::{PolicyContext, PolicyKind};

pub const MAGIC: &[u8; 4] = b"BCDS";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetHeader {
    pub version: u32,
    pub n_records: u64,
    pub track_shape: [usize; 2],
    pub raster_shape: [usize; 3],
    pub action_shape: [usize; 1],
    pub obs_dtype: String,
    pub action_dtype: String,
    pub byte_order: String,
    pub grid_size: usize,
    pub teacher: String,
    pub config_hash: String,
}

impl DatasetHeader {
    pub fn new(n_records: u64, raster_size: usize, grid_size: usize, teacher: &str, config_hash: String) -> Self {
        Self {
            version: FORMAT_VERSION,
            n_records,
            track_shape: [MAX_TRACKS, TRACK_FEATURES],
            raster_shape: [1, raster_size, raster_size],
            action_shape: [2],
            obs_dtype: "float32".into(),
            action_dtype: "int32".into(),
            byte_order: "little".into(),
            grid_size,
            teacher: teacher.into(),
            config_hash,
        }
    }

    fn track_len(&self) -> usize {
        self.track_shape.iter().product()
    }

    fn raster_len(&self) -> usize {
        self.raster_shape.iter().product()
    }

    pub fn record_bytes(&self) -> usize {
        4 * (self.track_len() + self.raster_len() + 2)
    }

    fn check(&self) -> Result<()> {
        let supported = self.version == FORMAT_VERSION
            && self.track_shape == [MAX_TRACKS, TRACK_FEATURES]
            && self.raster_shape[0] == 1
            && self.raster_shape[1] == self.raster_shape[2]
            && self.action_shape == [2]
            && self.obs_dtype == "float32"
            && self.action_dtype == "int32"
            && self.byte_order == "little";
        if !supported {
            return Err(Error::Integrity(format!("unsupported dataset header {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BcRecord {
    pub observation: Observation,
    pub action: BeamAction,
}

/// Streams records after writing the header. `finish` fails unless exactly
/// `n_records` were written.
pub struct DatasetWriter<W: Write> {
    w: W,
    header: DatasetHeader,
    written: u64,
    buf: Vec<u8>,
}

impl<W: Write> DatasetWriter<W> {
    pub fn new(mut w: W, header: DatasetHeader) -> Result<Self> {
        if header.n_records == 0 {
            return Err(Error::Domain("a dataset needs at least one record".into()));
        }
        header.check()?;
        let json = serde_json::to_vec(&header)?;
        let len = u32::try_from(json.len())
            .map_err(|_| Error::Domain("dataset header too large".into()))?;
        w.write_all(MAGIC)?;
        w.write_all(&len.to_le_bytes())?;
        w.write_all(&json)?;
        Ok(Self {
            buf: Vec::with_capacity(header.record_bytes()),
            w,
            header,
            written: 0,
        })
    }

    pub fn write(&mut self, obs: &Observation, action: BeamAction) -> Result<()> {
        let h = &self.header;
        if self.written >= h.n_records {
            return Err(Error::Contract(format!("dataset already holds {} records", h.n_records)));
        }
        if obs.track_matrix.len() != h.track_len() || obs.scan_raster.len() != h.raster_len() {
            return Err(Error::Contract("observation shape differs from the dataset header".into()));
        }
        if action.a_psi as usize >= h.grid_size || action.a_theta as usize >= h.grid_size {
            return Err(Error::Contract(format!("action {action:?} outside the grid")));
        }
        self.buf.clear();
        for v in obs.track_matrix.iter().chain(&obs.scan_raster) {
            self.buf.extend_from_slice(&v.to_le_bytes());
        }
        self.buf.extend_from_slice(&(action.a_psi as i32).to_le_bytes());
        self.buf.extend_from_slice(&(action.a_theta as i32).to_le_bytes());
        self.w.write_all(&self.buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        if self.written != self.header.n_records {
            return Err(Error::Integrity(format!(
                "wrote {} records, header promises {}",
                self.written, self.header.n_records
            )));
        }
        self.w.flush()?;
        Ok(self.w)
    }
}

/// Yields `n_records` records; stops after the first error.
pub struct DatasetReader<R: Read> {
    r: R,
    header: DatasetHeader,
    read: u64,
    failed: bool,
    buf: Vec<u8>,
}

impl<R: Read> DatasetReader<R> {
    pub fn new(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Integrity("not a behaviour-cloning dataset".into()));
        }
        let mut len = [0u8; 4];
        r.read_exact(&mut len)?;
        let mut json = vec![0u8; u32::from_le_bytes(len) as usize];
        r.read_exact(&mut json)?;
        let header: DatasetHeader = serde_json::from_slice(&json)?;
        header.check()?;
        Ok(Self {
            buf: vec![0u8; header.record_bytes()],
            r,
            header,
            read: 0,
            failed: false,
        })
    }

    pub fn header(&self) -> &DatasetHeader {
        &self.header
    }

    fn next_record(&mut self) -> Result<BcRecord> {
        self.r.read_exact(&mut self.buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Integrity(format!(
                "dataset truncated after {} of {} records",
                self.read, self.header.n_records
            )),
            _ => e.into(),
        })?;
        self.read += 1;
        let mut words = self.buf.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]);
        let track_matrix = words.by_ref().take(self.header.track_len()).map(f32::from_le_bytes).collect();
        let scan_raster = words.by_ref().take(self.header.raster_len()).map(f32::from_le_bytes).collect();
        let mut action = words.map(i32::from_le_bytes);
        let (a, b) = (action.next().unwrap_or(-1), action.next().unwrap_or(-1));
        let n = self.header.grid_size as i32;
        if !(0..n).contains(&a) || !(0..n).contains(&b) {
            return Err(Error::Integrity(format!("record {} holds invalid action ({a}, {b})", self.read - 1)));
        }
        Ok(BcRecord {
            observation: Observation {
                track_matrix,
                scan_raster,
                raster_size: self.header.raster_shape[1],
            },
            action: BeamAction::new(a as u32, b as u32),
        })
    }

    /// Fails if the stream holds bytes after the last record.
    pub fn expect_end(mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.r.read(&mut probe)? {
            0 => Ok(()),
            _ => Err(Error::Integrity("trailing bytes after the last record".into())),
        }
    }
}

impl<R: Read> Iterator for DatasetReader<R> {
    type Item = Result<BcRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.read >= self.header.n_records {
            return None;
        }
        let record = self.next_record();
        self.failed = record.is_err();
        Some(record)
    }
}

/// Drives episodes with `teacher`, recording the observation each action
/// was chosen from. Episode `k` uses seed `config.seed + k`.
pub fn export_bc_dataset<W: Write>(
    config: &EpisodeConfig,
    n_samples: u64,
    teacher: PolicyKind,
    out: W,
) -> Result<(DatasetHeader, W)> {
    let mut env = Environment::new(config.clone())?;
    let header = DatasetHeader::new(
        n_samples,
        config.scan.raster_size,
        env.grid().size(),
        teacher.name(),
        config.hash(),
    );
    let mut writer = DatasetWriter::new(out, header.clone())?;
    let mut written = 0;
    let mut episode = 0u64;
    while written < n_samples {
        let seed = config.seed.wrapping_add(episode);
        let mut obs = env.reset(Some(seed))?;
        let mut policy = teacher.build(seed);
        while !env.is_done() && written < n_samples {
            let ctx = PolicyContext {
                step: env.steps_taken(),
                grid: env.grid(),
                observation: Some(&obs),
            };
            let action = policy.act(&ctx)?;
            writer.write(&obs, action)?;
            written += 1;
            obs = env
                .step(action)?
                .observation
                .ok_or_else(|| Error::Contract("environment stopped producing observations".into()))?;
        }
        episode += 1;
    }
    Ok((header, writer.finish()?))
}
