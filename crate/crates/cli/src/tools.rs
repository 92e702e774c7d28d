//! `logprob`, `extract-constraints`, `train`, `oracle` and `convert`.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use log::{info, warn};
use ppsmc::io::ConstraintFile;
use ppsmc::music::io::{corpus_files, load_events, save_events};
use ppsmc::music::{
    canonicalize, events_to_symbols, midi, train_ngram, DiscreteStepModel, MusicEvent,
    MusicSequenceModel, NGramModel, Vocabulary,
};
use ppsmc::oracle::{compare_with_smc, OracleReport};
use ppsmc::{log_probability, Error};
use serde::{Deserialize, Serialize};

use crate::spec::{parse_cells, parse_grid, AnyModel, ModelSource};
use crate::UsageError;

#[derive(Debug, Clone, Serialize)]
pub struct LogProbEntry {
    pub file: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index: Option<usize>,
    pub events: usize,
    /// `null` when the sequence has probability zero.
    pub log_prob: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zero_step: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LogProbReport {
    pub entries: Vec<LogProbEntry>,
    pub histogram: Histogram,
}

pub fn histogram(values: &[f64], bins: usize) -> Histogram {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    if finite.is_empty() || bins == 0 {
        return Histogram {
            edges: Vec::new(),
            counts: Vec::new(),
        };
    }
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi == lo {
        hi = lo + 1.0;
    }
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
    let mut counts = vec![0u64; bins];
    for v in finite {
        let i = (((v - lo) / width) as usize).min(bins - 1);
        counts[i] += 1;
    }
    Histogram { edges, counts }
}

fn score(model: &AnyModel, times: &[f64]) -> Result<(Option<f64>, Option<usize>)> {
    match log_probability(model, times) {
        Ok(lp) => Ok((Some(lp), None)),
        Err(Error::ZeroProbability { step }) => Ok((None, Some(step))),
        Err(e) => Err(e.into()),
    }
}

#[derive(Deserialize)]
struct SampleLine {
    samples: Vec<Vec<f64>>,
}

fn music_entry(ngram: &NGramModel, prefix: &[MusicEvent], path: &Path) -> Result<LogProbEntry> {
    let vocab = *ngram.vocabulary();
    let events = canonicalize(&vocab, load_events(path)?)?;
    let file = path.display().to_string();
    let Some(last) = events.last() else {
        return Ok(LogProbEntry {
            file,
            index: None,
            events: 0,
            log_prob: Some(0.0),
            zero_step: None,
        });
    };
    let horizon = MusicSequenceModel::<NGramModel>::horizon_for_tick(&vocab, last.t);
    let m = MusicSequenceModel::new(ngram.clone(), prefix, horizon)?;
    let times = events
        .iter()
        .map(|e| m.time_of_event(e))
        .collect::<ppsmc::Result<Vec<_>>>()?;
    let model = AnyModel::Music(m);
    let (log_prob, zero_step) = score(&model, &times)?;
    Ok(LogProbEntry {
        file,
        index: None,
        events: events.len(),
        log_prob,
        zero_step,
    })
}

/// Log probability per input. Music models read event files; continuous
/// models read the `samples.jsonl` written by `sample` and `beam`.
pub fn logprob(
    model: &str,
    prefix: Option<&Path>,
    inputs: &[PathBuf],
    bins: usize,
) -> Result<LogProbReport> {
    let source = ModelSource::parse(model)?;
    let mut entries = Vec::new();
    match &source {
        ModelSource::NGram(ngram) => {
            let prefix = match prefix {
                Some(p) => canonicalize(ngram.vocabulary(), load_events(p)?)?,
                None => Vec::new(),
            };
            for path in inputs {
                entries.push(
                    music_entry(ngram, &prefix, path)
                        .with_context(|| format!("scoring {}", path.display()))?,
                );
            }
        }
        _ => {
            if prefix.is_some() {
                bail!(UsageError::new("--prefix applies to music models only"));
            }
            let model = source.continuous().expect("continuous model");
            for path in inputs {
                let reader = BufReader::new(
                    fs::File::open(path).with_context(|| format!("opening {}", path.display()))?,
                );
                let mut index = 0;
                for line in reader.lines() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let rec: SampleLine = serde_json::from_str(&line)
                        .with_context(|| format!("parsing {}", path.display()))?;
                    for times in rec.samples {
                        let (log_prob, zero_step) = score(&model, &times)?;
                        entries.push(LogProbEntry {
                            file: path.display().to_string(),
                            index: Some(index),
                            events: times.len(),
                            log_prob,
                            zero_step,
                        });
                        index += 1;
                    }
                }
            }
        }
    }
    let values: Vec<f64> = entries.iter().filter_map(|e| e.log_prob).collect();
    Ok(LogProbReport {
        histogram: histogram(&values, bins),
        entries,
    })
}

#[derive(Debug, Clone)]
pub struct ExtractArgs {
    pub events: PathBuf,
    pub split_tick: u64,
    pub part: u32,
    pub parts: u32,
    pub forbid_free: bool,
    pub out: PathBuf,
}

/// Writes `constraints.json` (codes of `part` from the split on) and
/// `prefix.jsonl` (all events before the split) into `out`.
pub fn extract_constraints(args: &ExtractArgs) -> Result<ConstraintFile> {
    let vocab = Vocabulary::midi(args.parts, 1)?;
    if args.part >= args.parts {
        bail!(UsageError::new(format!(
            "--part {} outside the {} parts of the vocabulary",
            args.part, args.parts
        )));
    }
    let events = canonicalize(&vocab, load_events(&args.events)?)?;
    let (prefix, rest): (Vec<MusicEvent>, Vec<MusicEvent>) =
        events.into_iter().partition(|e| e.t < args.split_tick);
    let codes = rest
        .iter()
        .filter(|e| e.part == args.part)
        .map(|e| vocab.encode(e))
        .collect::<ppsmc::Result<Vec<_>>>()?;
    if codes.is_empty() {
        warn!(
            "no events of part {} at or after tick {}; constraints are empty",
            args.part, args.split_tick
        );
    }
    let file =
        ConstraintFile::unrolled(&codes, vec![!args.forbid_free; codes.len()], vocab.a_max());
    fs::create_dir_all(&args.out)?;
    file.save(&args.out.join("constraints.json"))?;
    save_events(&args.out.join("prefix.jsonl"), &prefix)?;
    info!(
        "{} constraints, {} prefix events",
        codes.len(),
        prefix.len()
    );
    Ok(file)
}

#[derive(Debug, Clone)]
pub struct TrainArgs {
    pub corpus: PathBuf,
    pub order: usize,
    pub alpha: f64,
    pub parts: u32,
    pub s_max: u32,
    pub out: PathBuf,
}

pub fn train(args: &TrainArgs) -> Result<NGramModel> {
    let vocab = Vocabulary::midi(args.parts, args.s_max)?;
    let files =
        corpus_files(&args.corpus).with_context(|| format!("listing {}", args.corpus.display()))?;
    if files.is_empty() {
        bail!("no .jsonl event files in {}", args.corpus.display());
    }
    let corpus = files
        .iter()
        .map(|p| {
            let events = canonicalize(&vocab, load_events(p)?)?;
            events_to_symbols(&vocab, &events)
        })
        .zip(&files)
        .map(|(r, p)| r.with_context(|| format!("ingesting {}", p.display())))
        .collect::<Result<Vec<_>>>()?;
    let model = train_ngram(vocab, &corpus, args.order, args.alpha)?;
    fs::write(&args.out, model.to_json()?)
        .with_context(|| format!("writing {}", args.out.display()))?;
    info!(
        "trained order-{} model on {} files",
        args.order,
        files.len()
    );
    Ok(model)
}

#[derive(Debug, Clone)]
pub struct OracleArgs {
    pub cells: usize,
    pub grid: String,
    pub observed: String,
    pub particles: usize,
    pub runs: usize,
    pub seed: u64,
    pub threshold: f64,
}

pub fn oracle(args: &OracleArgs) -> Result<OracleReport> {
    let grid = parse_grid(&args.grid, args.cells)?;
    let observed = parse_cells(&args.observed)?;
    Ok(compare_with_smc(
        grid,
        &observed,
        args.particles,
        args.runs,
        args.seed,
        args.threshold,
    )?)
}

fn is_midi(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "mid" | "midi"))
}

/// MIDI to event file or back, by the input's extension.
pub fn convert(input: &Path, out: &Path) -> Result<usize> {
    if is_midi(input) {
        let events = midi::import(&fs::read(input)?)?;
        save_events(out, &events)?;
        Ok(events.len())
    } else {
        let events = load_events(input)?;
        fs::write(out, midi::export(&events)?)?;
        Ok(events.len())
    }
}
