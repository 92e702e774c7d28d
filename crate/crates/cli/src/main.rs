use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ppsmc::{BeamConfig, SmcConfig};

mod generate;
mod spec;
mod tools;

use generate::{GenerateArgs, Sampler, Window};

const EXIT_FAILURE: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_DIED: u8 = 3;
const EXIT_UNVERIFIED: u8 = 4;
const EXIT_ORACLE_FAIL: u8 = 5;

/// Invalid flags or configuration; exits with status 2.
#[derive(Debug)]
pub struct UsageError(String);

impl UsageError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser)]
#[command(
    name = "ppsmc",
    version,
    about = "Conditioned sampling of temporal point processes and event-based music"
)]
struct Cli {
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct GenFlags {
    /// Model spec: poisson:rate=R, weibull:shape=K[,scale=L], uniform:lo=A,hi=B, ngram:path=FILE
    #[arg(long)]
    model: String,
    /// Constraint file (JSON with z and b)
    #[arg(long)]
    constraints: Option<PathBuf>,
    /// Events preceding the sampling window (music models)
    #[arg(long)]
    prefix: Option<PathBuf>,
    /// Last tick of the sampling window (music models; default: tick of the last constraint)
    #[arg(long)]
    horizon_ticks: Option<u64>,
    #[arg(long)]
    seed: u64,
    /// Independent runs, each seeded from the master seed
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Write every particle or beam instead of one sample per run
    #[arg(long)]
    all_samples: bool,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Conditioned sampling with the particle sampler
    Sample {
        #[command(flatten)]
        gen: GenFlags,
        /// Ensemble size
        #[arg(long, default_value_t = 100)]
        particles: usize,
    },
    /// Beam-search baseline over the same proposal
    Beam {
        #[command(flatten)]
        gen: GenFlags,
        /// Samples per kept trajectory
        #[arg(long, default_value_t = 30)]
        beam_b: usize,
        /// Trajectories kept per barrier
        #[arg(long, default_value_t = 10)]
        beam_f: usize,
    },
    /// Log probabilities of sequences plus a histogram
    Logprob {
        #[arg(long)]
        model: String,
        #[arg(long)]
        prefix: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        bins: usize,
        /// Output JSON (default: stdout)
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
    /// Constraints from one part of a piece after a split tick
    ExtractConstraints {
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        split_tick: u64,
        #[arg(long, default_value_t = 0)]
        part: u32,
        /// Parts in the vocabulary the codes are computed for
        #[arg(long, default_value_t = 1)]
        parts: u32,
        /// Set every flag to false so nothing may be added between constraints
        #[arg(long)]
        forbid_free: bool,
        /// Output directory for constraints.json and prefix.jsonl
        #[arg(long)]
        out: PathBuf,
    },
    /// Train an n-gram model on a directory of event files
    Train {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 0.01)]
        alpha: f64,
        #[arg(long, default_value_t = 1)]
        parts: u32,
        /// Longest time shift in ticks
        #[arg(long, default_value_t = 9600)]
        s_max: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the particle sampler with exact enumeration on a grid model
    Oracle {
        #[arg(long, default_value_t = 8)]
        cells: usize,
        /// constant:p=P or markov:order=K,table=P0/P1/...
        #[arg(long, default_value = "markov:order=2,table=0.3/0.6/0.15/0.45")]
        model: String,
        /// Comma-separated occupied cells
        #[arg(long, default_value = "4")]
        observed: String,
        #[arg(long, default_value_t = 2000)]
        particles: usize,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.05)]
        threshold: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// MIDI to event file or back, chosen by the input extension
    Convert {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

impl GenFlags {
    fn into_args(self) -> GenerateArgs {
        GenerateArgs {
            model: self.model,
            constraints: self.constraints,
            window: Window {
                prefix: self.prefix,
                horizon_ticks: self.horizon_ticks,
            },
            seed: self.seed,
            runs: self.runs,
            all_samples: self.all_samples,
            out: self.out,
        }
    }
}

fn write_json<T: serde::Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn generation_status(summary: &generate::Summary) -> u8 {
    if !summary.verified {
        EXIT_UNVERIFIED
    } else if summary.survived < summary.runs {
        EXIT_DIED
    } else {
        0
    }
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Sample { gen, particles } => {
            if particles == 0 {
                bail!(UsageError::new("--particles must be at least 1"));
            }
            let summary =
                generate::generate(&gen.into_args(), Sampler::Smc(SmcConfig::new(particles)))?;
            Ok(generation_status(&summary))
        }
        Command::Beam {
            gen,
            beam_b,
            beam_f,
        } => {
            let config =
                BeamConfig::new(beam_b, beam_f).map_err(|e| UsageError::new(e.to_string()))?;
            let summary = generate::generate(&gen.into_args(), Sampler::Beam(config))?;
            Ok(generation_status(&summary))
        }
        Command::Logprob {
            model,
            prefix,
            bins,
            out,
            inputs,
        } => {
            let report = tools::logprob(&model, prefix.as_deref(), &inputs, bins)?;
            write_json(out.as_deref(), &report)?;
            Ok(0)
        }
        Command::ExtractConstraints {
            events,
            split_tick,
            part,
            parts,
            forbid_free,
            out,
        } => {
            tools::extract_constraints(&tools::ExtractArgs {
                events,
                split_tick,
                part,
                parts,
                forbid_free,
                out,
            })?;
            Ok(0)
        }
        Command::Train {
            corpus,
            order,
            alpha,
            parts,
            s_max,
            out,
        } => {
            tools::train(&tools::TrainArgs {
                corpus,
                order,
                alpha,
                parts,
                s_max,
                out,
            })?;
            Ok(0)
        }
        Command::Oracle {
            cells,
            model,
            observed,
            particles,
            runs,
            seed,
            threshold,
            out,
        } => {
            let report = tools::oracle(&tools::OracleArgs {
                cells,
                grid: model,
                observed,
                particles,
                runs,
                seed,
                threshold,
            })?;
            write_json(out.as_deref(), &report)?;
            Ok(if report.pass { 0 } else { EXIT_ORACLE_FAIL })
        }
        Command::Convert { input, out } => {
            let n = tools::convert(&input, &out)?;
            log::info!("converted {n} events");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("PPSMC_LOG", "warn")).init();
    let cli = Cli::parse();

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        pool = pool.num_threads(jobs);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_FAILURE);
        }
    };

    match pool.install(|| run(cli)) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let invalid_config = matches!(
                e.downcast_ref::<ppsmc::Error>(),
                Some(ppsmc::Error::InvalidConstraints(_) | ppsmc::Error::InvalidTime(_))
            );
            if invalid_config || e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_FAILURE)
            }
        }
    }
}
