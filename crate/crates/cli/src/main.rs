use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use aesa_core::dataset::export_bc_dataset;
use aesa_core::metrics::summary::{episode_summary, write_csv, EpisodeSummary};
use aesa_core::policy::ExternalPolicy;
use aesa_core::{run_episode, wire, EpisodeConfig, EpisodeTrace, PolicyKind};
use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

#[derive(Parser)]
#[command(name = "aesa", version, about = "AESA radar search-and-track simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PolicyArg {
    Static,
    Random,
    Coverage,
    /// Actions come from another process: requests on stdout, replies on stdin.
    External,
}

#[derive(Subcommand)]
enum Command {
    /// Run seeded episodes and write one trace per episode plus a summary.
    Run {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        policy: PolicyArg,
        #[arg(long, default_value_t = 1)]
        episodes: u64,
        /// Seed of the first episode; episode k uses seed + k.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 picks one per core.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Record (observation, action) pairs from a teacher policy.
    Dataset {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        samples: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "random")]
        teacher: String,
    },
    /// Recompute episode summaries from stored traces.
    Gospa {
        #[arg(long)]
        traces: PathBuf,
        /// Summary CSV path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Serve one environment over JSON lines on stdin/stdout.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<EpisodeConfig> {
    let mut config = match path {
        Some(p) => EpisodeConfig::from_json_file(p).with_context(|| format!("loading {}", p.display()))?,
        None => EpisodeConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    config.validate()?;
    Ok(config)
}

fn trace_path(dir: &Path, policy: &str, seed: u64) -> PathBuf {
    dir.join(format!("episode_{policy}_{seed:06}.jsonl"))
}

fn write_trace(trace: &EpisodeTrace, path: &Path) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    trace.write_jsonl(BufWriter::new(file))?;
    Ok(())
}

fn write_summaries(rows: &[EpisodeSummary], dir: &Path) -> Result<()> {
    write_csv(rows, BufWriter::new(File::create(dir.join("summary.csv"))?))?;
    let mut json = BufWriter::new(File::create(dir.join("summary.json"))?);
    serde_json::to_writer_pretty(&mut json, rows)?;
    json.write_all(b"\n")?;
    Ok(())
}

fn run(
    config: EpisodeConfig,
    policy: PolicyArg,
    episodes: u64,
    out: &Path,
    threads: usize,
) -> Result<()> {
    if episodes == 0 {
        bail!("--episodes must be at least 1");
    }
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let base = config.seed;
    let episode_config = |k: u64| EpisodeConfig {
        seed: base.wrapping_add(k),
        ..config.clone()
    };

    let kind = match policy {
        PolicyArg::External => {
            if episodes != 1 {
                bail!("the external policy drives exactly one episode per invocation");
            }
            let cfg = episode_config(0);
            let mut agent = ExternalPolicy::new(io::stdin().lock(), io::stdout().lock());
            let trace = run_episode(&cfg, &mut agent)?;
            write_trace(&trace, &trace_path(out, "external", cfg.seed))?;
            return write_summaries(&[episode_summary(&trace)?], out);
        }
        PolicyArg::Static => PolicyKind::Static,
        PolicyArg::Random => PolicyKind::Random,
        PolicyArg::Coverage => PolicyKind::Coverage,
    };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    // collect preserves seed order regardless of completion order
    let rows: Vec<EpisodeSummary> = pool.install(|| {
        (0..episodes)
            .into_par_iter()
            .map(|k| -> Result<EpisodeSummary> {
                let cfg = episode_config(k);
                let mut policy = kind.build(cfg.seed);
                let trace = run_episode(&cfg, policy.as_mut())?;
                write_trace(&trace, &trace_path(out, kind.name(), cfg.seed))?;
                Ok(episode_summary(&trace)?)
            })
            .collect::<Result<Vec<_>>>()
    })?;
    write_summaries(&rows, out)?;
    eprintln!("{} episodes written to {}", rows.len(), out.display());
    Ok(())
}

fn gospa(traces: &Path, out: Option<&Path>) -> Result<()> {
    let mut paths: Vec<PathBuf> = fs::read_dir(traces)
        .with_context(|| format!("reading {}", traces.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "jsonl"));
    paths.sort();
    if paths.is_empty() {
        bail!("no .jsonl traces in {}", traces.display());
    }
    let rows = paths
        .iter()
        .map(|p| -> Result<EpisodeSummary> {
            let trace = EpisodeTrace::read_jsonl(BufReader::new(File::open(p)?))
                .with_context(|| format!("reading {}", p.display()))?;
            Ok(episode_summary(&trace)?)
        })
        .collect::<Result<Vec<_>>>()?;
    match out {
        Some(p) => write_csv(&rows, BufWriter::new(File::create(p)?))?,
        None => write_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            policy,
            episodes,
            seed,
            out,
            threads,
        } => run(load_config(config.as_deref(), seed)?, policy, episodes, &out, threads),
        Command::Dataset {
            config,
            samples,
            out,
            seed,
            teacher,
        } => {
            if samples == 0 {
                bail!("--samples must be at least 1");
            }
            let config = load_config(config.as_deref(), seed)?;
            let teacher: PolicyKind = teacher.parse()?;
            let file = File::create(&out).with_context(|| format!("creating {}", out.display()))?;
            let (header, _) = export_bc_dataset(&config, samples, teacher, BufWriter::new(file))?;
            eprintln!("{} records written to {}", header.n_records, out.display());
            Ok(())
        }
        Command::Gospa { traces, out } => gospa(&traces, out.as_deref()),
        Command::Serve { config } => {
            let config = load_config(config.as_deref(), None)?;
            wire::serve(config, io::stdin().lock(), io::stdout().lock())?;
            Ok(())
        }
    }
}
