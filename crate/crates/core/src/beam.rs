//! Stochastic beam search over the same clipped proposal used by the particle
//! sampler: at every barrier each kept trajectory spawns `b` independent
//! segment proposals and the `f` candidates with the highest cumulative log
//! probability are retained.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::process::{log_density, EventSequence, SequenceModel, DEFAULT_MAX_EVENTS};
use crate::rng::StreamFactory;
use crate::smc::{extend_segment, BarrierDiagnostics, ConstraintSet, EnsembleResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeamConfig {
    branch: usize,
    keep: usize,
    pub max_events: usize,
}

impl BeamConfig {
    pub fn new(branch: usize, keep: usize) -> Result<Self> {
        if branch == 0 || keep == 0 {
            return Err(Error::Model(format!(
                "beam needs b >= 1 and f >= 1, got b = {branch}, f = {keep}"
            )));
        }
        Ok(Self {
            branch,
            keep,
            max_events: DEFAULT_MAX_EVENTS,
        })
    }

    /// Samples drawn from each kept trajectory (`b`).
    pub fn branch(&self) -> usize {
        self.branch
    }

    /// Trajectories kept at each barrier (`f`).
    pub fn keep(&self) -> usize {
        self.keep
    }

    pub fn trajectories_per_barrier(&self) -> usize {
        self.branch * self.keep
    }
}

#[derive(Debug, Clone)]
struct Trajectory {
    seq: Vec<f64>,
    log_prob: f64,
}

fn extend<M: SequenceModel>(
    model: &M,
    parent: &Trajectory,
    barrier: Option<f64>,
    allow_free: bool,
    rng: &mut rand_chacha::ChaCha8Rng,
    max_events: usize,
) -> Result<Trajectory> {
    let mut seq = parent.seq.clone();
    let start = seq.len();
    extend_segment(model, &mut seq, barrier, allow_free, rng, max_events)?;
    let mut log_prob = parent.log_prob;
    for i in start..seq.len() {
        log_prob += log_density(model, &seq[..i], seq[i])?;
    }
    Ok(Trajectory { seq, log_prob })
}

/// Runs the beam search once. Outputs are ordered by decreasing log
/// probability; ties keep the lower candidate index.
pub fn beam_search_sample<M: SequenceModel>(
    model: &M,
    constraints: &ConstraintSet,
    config: &BeamConfig,
    streams: &StreamFactory,
) -> Result<EnsembleResult> {
    let (b, f) = (config.branch, config.keep);
    let mut kept = vec![
        Trajectory {
            seq: Vec::new(),
            log_prob: 0.0,
        };
        f
    ];
    let mut diagnostics = Vec::with_capacity(constraints.len() + 1);

    for segment in 1..=constraints.len() + 1 {
        let barrier = constraints.barrier(segment);
        let allow_free = constraints.allows_free_events(segment);

        // Candidate c is child c % b of kept trajectory c / b.
        let candidates = (0..b * f)
            .into_par_iter()
            .map(|c| {
                let mut rng = streams.stream(segment as u32, c as u32);
                extend(
                    model,
                    &kept[c / b],
                    barrier,
                    allow_free,
                    &mut rng,
                    config.max_events,
                )
            })
            .collect::<Result<Vec<_>>>()?;

        let mut order: Vec<usize> = (0..candidates.len())
            .filter(|&c| candidates[c].log_prob > f64::NEG_INFINITY)
            .collect();
        let dead_count = candidates.len() - order.len();
        // stable: equal log probabilities keep ascending candidate index
        order.sort_by(|&x, &y| candidates[y].log_prob.total_cmp(&candidates[x].log_prob));
        let best_log_prob = order.first().map(|&c| candidates[c].log_prob);

        diagnostics.push(BarrierDiagnostics {
            barrier_index: segment,
            ess: None,
            min_weight: None,
            max_weight: None,
            dead_count,
            trajectories: candidates.len(),
            kept: order.len().min(f),
            best_log_prob,
        });

        if order.is_empty() {
            return Ok(EnsembleResult {
                samples: Vec::new(),
                log_probs: None,
                survived: false,
                failed_barrier: Some(segment),
                diagnostics,
            });
        }
        // With fewer than f live candidates the survivors fill the f slots
        // cyclically in rank order, so every barrier still explores b * f.
        kept = order
            .iter()
            .cycle()
            .take(f)
            .map(|&c| candidates[c].clone())
            .collect();
        if order.len() < f && barrier.is_none() {
            kept.truncate(order.len());
        }
    }

    let log_probs = kept.iter().map(|t| t.log_prob).collect();
    Ok(EnsembleResult {
        samples: kept
            .into_iter()
            .map(|t| EventSequence::new(t.seq))
            .collect::<Result<_>>()?,
        log_probs: Some(log_probs),
        survived: true,
        failed_barrier: None,
        diagnostics,
    })
}
