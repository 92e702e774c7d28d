//! `sample` and `beam`: conditioned generation with output and verification.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use ppsmc::io::{ConstraintFile, Domain};
use ppsmc::music::{canonicalize, io::load_events, io::save_events, MusicSequenceModel};
use ppsmc::{
    beam_search_sample, conditional_sample, BeamConfig, ConstraintSet, EnsembleResult, SmcConfig,
    StreamFactory,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::spec::{AnyModel, ModelSource};
use crate::UsageError;

#[derive(Debug, Clone, Copy)]
pub enum Sampler {
    Smc(SmcConfig),
    Beam(BeamConfig),
}

#[derive(Debug, Clone)]
pub struct Window {
    pub prefix: Option<PathBuf>,
    pub horizon_ticks: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct GenerateArgs {
    pub model: String,
    pub constraints: Option<PathBuf>,
    pub window: Window,
    pub seed: u64,
    pub runs: usize,
    pub all_samples: bool,
    pub out: PathBuf,
}

/// What a generation command reports back to the caller.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub command: &'static str,
    pub model: String,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub particles: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beam_b: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beam_f: Option<usize>,
    pub runs: usize,
    pub survived: usize,
    pub survival_rate: f64,
    pub failed: Vec<FailedRun>,
    pub verified: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FailedRun {
    pub run: usize,
    pub barrier: Option<usize>,
}

#[derive(Serialize)]
struct SampleRecord<'a> {
    run: usize,
    survived: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    failed_barrier: Option<usize>,
    samples: Vec<&'a [f64]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    log_probs: Option<&'a [f64]>,
}

#[derive(Serialize)]
struct DiagnosticRecord<'a> {
    run: usize,
    #[serde(flatten)]
    barrier: &'a ppsmc::BarrierDiagnostics,
}

/// Binds the model to the constraints' time window.
pub fn prepare(
    source: ModelSource,
    constraints: Option<&ConstraintFile>,
    window: &Window,
) -> Result<(AnyModel, ConstraintSet)> {
    let empty = ConstraintFile::unit(&ConstraintSet::unconstrained());
    let file = constraints.unwrap_or(&empty);
    let ModelSource::NGram(ngram) = source else {
        if file.domain == Domain::Unrolled && !file.z.is_empty() {
            bail!(UsageError::new(
                "code-domain constraints need a music model"
            ));
        }
        if window.prefix.is_some() || window.horizon_ticks.is_some() {
            bail!(UsageError::new(
                "--prefix and --horizon-ticks apply to music models only"
            ));
        }
        let model = source.continuous().expect("continuous model");
        return Ok((model, ConstraintSet::new(file.z.clone(), file.b.clone())?));
    };

    let vocab = *ppsmc::music::DiscreteStepModel::vocabulary(&ngram);
    if file.domain == Domain::Unit && !file.z.is_empty() {
        bail!(UsageError::new(
            "music models take code-domain constraints (\"domain\": \"unrolled\")"
        ));
    }
    if let Some(a_max) = file.a_max {
        if a_max != vocab.a_max() {
            bail!(UsageError::new(format!(
                "constraints were encoded with a_max = {a_max}, the model uses {}",
                vocab.a_max()
            )));
        }
    }
    let codes = if file.z.is_empty() {
        Vec::new()
    } else {
        file.codes()?
    };
    let prefix = match &window.prefix {
        Some(p) => canonicalize(
            &vocab,
            load_events(p).with_context(|| format!("reading {}", p.display()))?,
        )?,
        None => Vec::new(),
    };
    let last_tick = match (window.horizon_ticks, codes.last()) {
        (Some(t), _) => t,
        (None, Some(&c)) => vocab.position(c)?.0,
        (None, None) => bail!(UsageError::new(
            "no constraints to size the window; pass --horizon-ticks"
        )),
    };
    let horizon =
        MusicSequenceModel::<ppsmc::music::NGramModel>::horizon_for_tick(&vocab, last_tick);
    let model = MusicSequenceModel::new(ngram, &prefix, horizon)?;
    let z = codes
        .iter()
        .map(|&c| model.time_of_code(c))
        .collect::<ppsmc::Result<Vec<_>>>()?;
    Ok((
        AnyModel::Music(model),
        ConstraintSet::new(z, file.b.clone())?,
    ))
}

pub fn run_sampler(
    model: &AnyModel,
    constraints: &ConstraintSet,
    sampler: Sampler,
    seed: u64,
    runs: usize,
) -> Result<Vec<EnsembleResult>> {
    let streams = StreamFactory::new(seed);
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let f = streams.run(r as u64);
            Ok(match sampler {
                Sampler::Smc(c) => conditional_sample(model, constraints, &c, &f)?,
                Sampler::Beam(c) => beam_search_sample(model, constraints, &c, &f)?,
            })
        })
        .collect()
}

fn write_lines<T: Serialize>(path: &Path, records: impl IntoIterator<Item = T>) -> Result<()> {
    let mut buf = Vec::new();
    for r in records {
        serde_json::to_writer(&mut buf, &r)?;
        buf.push(b'\n');
    }
    fs::write(path, buf).with_context(|| format!("writing {}", path.display()))
}

pub fn generate(args: &GenerateArgs, sampler: Sampler) -> Result<Summary> {
    let source = ModelSource::parse(&args.model)?;
    let file = match &args.constraints {
        Some(p) => {
            Some(ConstraintFile::load(p).with_context(|| format!("reading {}", p.display()))?)
        }
        None => None,
    };
    let (model, constraints) = prepare(source, file.as_ref(), &args.window)?;
    if args.runs == 0 {
        bail!(UsageError::new("--runs must be at least 1"));
    }
    info!(
        "{} constraints, {} runs, seed {}",
        constraints.len(),
        args.runs,
        args.seed
    );
    let results = run_sampler(&model, &constraints, sampler, args.seed, args.runs)?;

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let keep = |res: &EnsembleResult| {
        if args.all_samples {
            res.samples.len()
        } else {
            res.samples.len().min(1)
        }
    };

    write_lines(
        &args.out.join("samples.jsonl"),
        results.iter().enumerate().map(|(run, res)| SampleRecord {
            run,
            survived: res.survived,
            failed_barrier: res.failed_barrier,
            samples: res.samples[..keep(res)]
                .iter()
                .map(|x| x.as_slice())
                .collect(),
            log_probs: res.log_probs.as_deref().map(|lp| &lp[..keep(res)]),
        }),
    )?;
    write_lines(
        &args.out.join("diagnostics.jsonl"),
        results.iter().enumerate().flat_map(|(run, res)| {
            res.diagnostics
                .iter()
                .map(move |barrier| DiagnosticRecord { run, barrier })
        }),
    )?;

    let mut verified = true;
    for (run, res) in results.iter().enumerate() {
        for x in &res.samples[..keep(res)] {
            if !constraints.is_satisfied_by(x.as_slice()) {
                warn!("run {run}: sample violates the constraints");
                verified = false;
            }
        }
    }

    if let AnyModel::Music(m) = &model {
        let dir = args.out.join("events");
        fs::create_dir_all(&dir)?;
        for (run, res) in results.iter().enumerate() {
            for (i, x) in res.samples[..keep(res)].iter().enumerate() {
                let name = if args.all_samples {
                    format!("run-{run:04}-{i:04}.jsonl")
                } else {
                    format!("run-{run:04}.jsonl")
                };
                save_events(&dir.join(name), &m.events_of_times(x.as_slice())?)?;
            }
        }
    }

    let failed: Vec<FailedRun> = results
        .iter()
        .enumerate()
        .filter(|(_, r)| !r.survived)
        .map(|(run, r)| FailedRun {
            run,
            barrier: r.failed_barrier,
        })
        .collect();
    let survived = args.runs - failed.len();
    let (particles, beam_b, beam_f, command) = match sampler {
        Sampler::Smc(c) => (Some(c.particles), None, None, "sample"),
        Sampler::Beam(c) => (None, Some(c.branch()), Some(c.keep()), "beam"),
    };
    let summary = Summary {
        command,
        model: args.model.clone(),
        seed: args.seed,
        particles,
        beam_b,
        beam_f,
        runs: args.runs,
        survived,
        survival_rate: survived as f64 / args.runs as f64,
        failed,
        verified,
    };
    let mut f = fs::File::create(args.out.join("summary.json"))?;
    serde_json::to_writer_pretty(&mut f, &summary)?;
    f.write_all(b"\n")?;
    info!("{survived}/{} runs survived", args.runs);
    Ok(summary)
}
