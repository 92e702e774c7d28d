//! Particle sampler for a point process conditioned on required event times.
//!
//! The unit interval is cut at the required times `z_1 < ... < z_R`. Each
//! particle extends its sequence one segment at a time with the model's own
//! recursion, clipped so that the segment ends exactly on `z_i`. The particle
//! is then weighted by the model's hazard at `z_i` (or by the plain density
//! when no free events were allowed in the segment) and the ensemble is
//! resampled. The final open segment runs the unmodified recursion until the
//! first event past 1 and carries unit weights, so it is never resampled.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::process::{
    check_advance, hazard, last_or_origin, EventSequence, InterArrival, SequenceModel,
    DEFAULT_MAX_EVENTS,
};
use crate::rng::StreamFactory;

/// Required times `z` in `(0, 1]` and the flags `b` saying whether free events
/// may be generated in the gap following each `z_i`.
///
/// Events are always allowed before `z_1`. When `b_r` is false the sequence
/// must end at `z_r`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    z: Vec<f64>,
    b: Vec<bool>,
}

impl ConstraintSet {
    pub fn new(z: Vec<f64>, b: Vec<bool>) -> Result<Self> {
        if z.len() != b.len() {
            return Err(Error::InvalidConstraints(format!(
                "{} times but {} flags",
                z.len(),
                b.len()
            )));
        }
        for (i, &t) in z.iter().enumerate() {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidConstraints(format!(
                    "z[{i}] = {t} outside (0, 1]"
                )));
            }
            if i > 0 && z[i - 1] >= t {
                return Err(Error::InvalidConstraints(format!(
                    "z[{i}] = {t} does not exceed z[{}] = {}",
                    i - 1,
                    z[i - 1]
                )));
            }
        }
        Ok(Self { z, b })
    }

    /// All-true flags.
    pub fn allowing_all(z: Vec<f64>) -> Result<Self> {
        let b = vec![true; z.len()];
        Self::new(z, b)
    }

    pub fn unconstrained() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.z
    }

    pub fn flags(&self) -> &[bool] {
        &self.b
    }

    /// Required time closing the 1-based `segment`, `None` for the final one.
    pub fn barrier(&self, segment: usize) -> Option<f64> {
        self.z.get(segment - 1).copied()
    }

    /// Whether free events may be generated in the 1-based `segment`.
    pub fn allows_free_events(&self, segment: usize) -> bool {
        segment == 1 || self.b[segment - 2]
    }

    /// Constraint indicator: every `z_i` occurs in `x`, and no event of `x`
    /// falls strictly between `z_i` and `z_{i+1}` when `b_i` is false.
    pub fn is_satisfied_by(&self, x: &[f64]) -> bool {
        if x.windows(2).any(|w| w[0] >= w[1]) {
            return false;
        }
        if !self
            .z
            .iter()
            .all(|z| x.binary_search_by(|v| v.total_cmp(z)).is_ok())
        {
            return false;
        }
        self.z
            .iter()
            .zip(&self.b)
            .enumerate()
            .all(|(i, (&lo, &free))| {
                if free {
                    return true;
                }
                let hi = self.z.get(i + 1).copied().unwrap_or(f64::INFINITY);
                !x.iter().any(|&v| v > lo && v < hi)
            })
    }
}

/// One member of the ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub seq: Vec<f64>,
    pub weight: f64,
    pub alive: bool,
}

impl Particle {
    fn new() -> Self {
        Self {
            seq: Vec::new(),
            weight: 1.0,
            alive: true,
        }
    }
}

/// A proposed segment: the appended events, the gap leading to its last
/// event, and whether that event was produced by clipping at the barrier.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub events: Vec<f64>,
    pub gap: Option<f64>,
    pub clipped: bool,
}

/// Per-barrier record of the ensemble state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarrierDiagnostics {
    pub barrier_index: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ess: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub min_weight: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_weight: Option<f64>,
    pub dead_count: usize,
    /// Candidate trajectories generated for this barrier.
    pub trajectories: usize,
    /// Trajectories retained after the barrier.
    pub kept: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub best_log_prob: Option<f64>,
}

/// Outcome of one sampler run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub samples: Vec<EventSequence>,
    /// Log probability of each sample, when the sampler tracks it.
    pub log_probs: Option<Vec<f64>>,
    pub survived: bool,
    /// 1-based barrier at which every trajectory had zero probability.
    pub failed_barrier: Option<usize>,
    pub diagnostics: Vec<BarrierDiagnostics>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SmcConfig {
    pub particles: usize,
    pub max_events: usize,
}

impl SmcConfig {
    pub fn new(particles: usize) -> Self {
        Self {
            particles,
            max_events: DEFAULT_MAX_EVENTS,
        }
    }
}

/// Extends `seq` by one segment in place.
pub(crate) fn extend_segment<M, R>(
    model: &M,
    seq: &mut Vec<f64>,
    barrier: Option<f64>,
    allow_free: bool,
    rng: &mut R,
    max_events: usize,
) -> Result<(Option<f64>, bool)>
where
    M: SequenceModel,
    R: Rng + ?Sized,
{
    if !allow_free {
        return Ok(match barrier {
            Some(z) => {
                let last = last_or_origin(seq);
                seq.push(z);
                (Some(z - last), false)
            }
            None => (None, false),
        });
    }
    loop {
        if seq.len() >= max_events {
            return Err(Error::IterationCap { cap: max_events });
        }
        let last = last_or_origin(seq);
        let gap = model.next_gap(seq)?.sample(rng);
        let next = model.quantize(last + gap);
        check_advance(last, next)?;
        match barrier {
            // Landing exactly on the barrier counts as clipped: the proposal's
            // atom at z covers every gap >= z - last.
            Some(z) if next >= z => {
                seq.push(z);
                return Ok((Some(z - last), true));
            }
            None if next > 1.0 => return Ok((Some(next - last), false)),
            _ => seq.push(next),
        }
    }
}

/// Proposes the segment ending at `barrier` (or the final open segment when
/// `barrier` is `None`) following `history`.
pub fn propose_segment<M, R>(
    model: &M,
    history: &[f64],
    barrier: Option<f64>,
    allow_free: bool,
    rng: &mut R,
    max_events: usize,
) -> Result<Segment>
where
    M: SequenceModel,
    R: Rng + ?Sized,
{
    if let Some(z) = barrier {
        let last = last_or_origin(history);
        if z.is_nan() || z <= last {
            return Err(Error::NotAfterHistory { t: z, last });
        }
    }
    let mut seq = history.to_vec();
    let (gap, clipped) = extend_segment(model, &mut seq, barrier, allow_free, rng, max_events)?;
    Ok(Segment {
        events: seq.split_off(history.len()),
        gap,
        clipped,
    })
}

/// Importance weight of a particle whose sequence `seq` ends on a barrier
/// reached by a last gap of `gap`.
///
/// Free segments are weighted by the hazard `f(d) / P(D >= d)` of the law
/// conditioned on everything before the barrier event; forced segments by the
/// density `f(d)`. The final segment has unit weight.
pub fn barrier_weight<M: SequenceModel>(
    model: &M,
    seq: &[f64],
    gap: f64,
    allow_free: bool,
    is_final: bool,
) -> Result<f64> {
    if is_final {
        return Ok(1.0);
    }
    let Some((_, before)) = seq.split_last() else {
        return Err(Error::Model(
            "barrier weight needs a non-empty sequence".into(),
        ));
    };
    let law = model.next_gap(before)?;
    if allow_free {
        hazard(&law, gap)
    } else {
        Ok(law.pdf(gap))
    }
}

fn check_weights(weights: &[f64]) -> Result<()> {
    match weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        Some(&w) => Err(Error::InvalidWeight(w)),
        None => Ok(()),
    }
}

/// Systematic resampling with a single uniform draw `u` in `(0, 1]`.
///
/// Returns `S` non-decreasing 0-based indices; index `s` is repeated either
/// `floor(S w_s)` or `ceil(S w_s)` times (normalized weights).
pub fn systematic_resample_with_offset(weights: &[f64], u: f64) -> Result<Vec<usize>> {
    check_weights(weights)?;
    let n = weights.len();
    let max = weights.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::EnsembleDied);
    }
    // Scale so the weights sum to S; equal weights become exactly 1.
    let unit: Vec<f64> = weights.iter().map(|w| w / max).collect();
    let total: f64 = unit.iter().sum();
    let scaled: Vec<f64> = unit.iter().map(|w| w * n as f64 / total).collect();
    let last_live = scaled.iter().rposition(|&w| w > 0.0).expect("max > 0");

    let mut out = Vec::with_capacity(n);
    let mut j = 0;
    let mut cumulative = scaled[0];
    for l in 0..n {
        // Pointer l sits at u + l on the scaled axis.
        while j < last_live && (cumulative - (l as f64) < u || scaled[j] == 0.0) {
            j += 1;
            cumulative += scaled[j];
        }
        out.push(j);
    }
    Ok(out)
}

pub fn systematic_resample<R: Rng + ?Sized>(weights: &[f64], rng: &mut R) -> Result<Vec<usize>> {
    let u = 1.0 - rng.random::<f64>();
    systematic_resample_with_offset(weights, u)
}

/// `(sum w)^2 / sum w^2`.
pub fn effective_sample_size(weights: &[f64]) -> Result<f64> {
    check_weights(weights)?;
    let max = weights.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(Error::EnsembleDied);
    }
    let (s, s2) = weights
        .iter()
        .map(|w| w / max)
        .fold((0.0, 0.0), |(s, s2), w| (s + w, s2 + w * w));
    Ok(s * s / s2)
}

fn weight_diagnostics(barrier_index: usize, weights: &[f64]) -> BarrierDiagnostics {
    let dead_count = weights.iter().filter(|&&w| w == 0.0).count();
    BarrierDiagnostics {
        barrier_index,
        ess: effective_sample_size(weights).ok(),
        min_weight: weights.iter().copied().reduce(f64::min),
        max_weight: weights.iter().copied().reduce(f64::max),
        dead_count,
        trajectories: weights.len(),
        kept: weights.len(),
        best_log_prob: None,
    }
}

/// Runs the conditioned particle sampler once.
///
/// Particle `s` draws from stream `(segment, s)` of `streams` and the
/// resampling offset at each barrier from the coordinator stream, so output
/// does not depend on the number of worker threads.
pub fn conditional_sample<M: SequenceModel>(
    model: &M,
    constraints: &ConstraintSet,
    config: &SmcConfig,
    streams: &StreamFactory,
) -> Result<EnsembleResult> {
    if config.particles == 0 {
        return Err(Error::Model("particle count must be at least 1".into()));
    }
    let mut particles = vec![Particle::new(); config.particles];
    let mut diagnostics = Vec::with_capacity(constraints.len());

    for segment in 1..=constraints.len() + 1 {
        let barrier = constraints.barrier(segment);
        let allow_free = constraints.allows_free_events(segment);

        particles = particles
            .into_par_iter()
            .enumerate()
            .map(|(s, mut p)| {
                let mut rng = streams.stream(segment as u32, s as u32);
                let (gap, _) = extend_segment(
                    model,
                    &mut p.seq,
                    barrier,
                    allow_free,
                    &mut rng,
                    config.max_events,
                )?;
                p.weight = match (barrier, gap) {
                    (Some(_), Some(gap)) => barrier_weight(model, &p.seq, gap, allow_free, false)?,
                    _ => 1.0,
                };
                p.alive = p.weight > 0.0;
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;

        if barrier.is_none() {
            break;
        }
        let weights: Vec<f64> = particles.iter().map(|p| p.weight).collect();
        diagnostics.push(weight_diagnostics(segment, &weights));
        let ancestors =
            match systematic_resample(&weights, &mut streams.coordinator(segment as u32)) {
                Ok(k) => k,
                Err(Error::EnsembleDied) => {
                    return Ok(EnsembleResult {
                        samples: Vec::new(),
                        log_probs: None,
                        survived: false,
                        failed_barrier: Some(segment),
                        diagnostics,
                    })
                }
                Err(e) => return Err(e),
            };
        particles = ancestors
            .into_iter()
            .map(|k| particles[k].clone())
            .collect();
    }

    Ok(EnsembleResult {
        samples: particles
            .into_iter()
            .map(|p| EventSequence::from_sorted(p.seq))
            .collect(),
        log_probs: None,
        survived: true,
        failed_barrier: None,
        diagnostics,
    })
}
