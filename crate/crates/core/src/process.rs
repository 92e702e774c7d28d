//! One-dimensional point processes defined through their inter-arrival law.
//!
//! A process is specified by a [`SequenceModel`], which maps the history of
//! generated events to the distribution of the gap until the next event. The
//! origin `x_0 = 0` is implicit: histories and [`EventSequence`]s hold the
//! generated events only.

use std::ops::RangeBounds;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on the number of events generated for one restricted sample.
pub const DEFAULT_MAX_EVENTS: usize = 1_000_000;

/// Survival values at or below this are treated as a saturated cdf.
pub const SURVIVAL_FLOOR: f64 = 1e-300;

/// A strictly increasing sequence of event times.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EventSequence(Vec<f64>);

impl EventSequence {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        for (i, &t) in times.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::InvalidTime(t));
            }
            if i > 0 && times[i - 1] >= t {
                return Err(Error::NotIncreasing {
                    index: i,
                    prev: times[i - 1],
                    next: t,
                });
            }
        }
        Ok(Self(times))
    }

    pub fn empty() -> Self {
        Self(Vec::new())
    }

    /// Wraps times that the caller already knows to be strictly increasing.
    pub(crate) fn from_sorted(times: Vec<f64>) -> Self {
        debug_assert!(times.windows(2).all(|w| w[0] < w[1]));
        Self(times)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Last event, or the origin when nothing has been generated.
    pub fn last_or_origin(&self) -> f64 {
        last_or_origin(&self.0)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.0.iter().copied()
    }
}

impl TryFrom<Vec<f64>> for EventSequence {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EventSequence> for Vec<f64> {
    fn from(s: EventSequence) -> Self {
        s.0
    }
}

impl AsRef<[f64]> for EventSequence {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

pub(crate) fn last_or_origin(history: &[f64]) -> f64 {
    history.last().copied().unwrap_or(0.0)
}

/// Distribution of the gap `d > 0` to the next event.
pub trait InterArrival {
    fn pdf(&self, gap: f64) -> f64;

    fn cdf(&self, gap: f64) -> f64;

    /// Mass of gaps at least as long as `gap`, `P(D >= gap)`.
    ///
    /// This is the mass the clipped proposal places on a barrier reached at
    /// distance `gap`. For continuous laws it equals `1 - cdf(gap)`; lattice
    /// laws override it to include the atom at `gap` itself.
    fn survival(&self, gap: f64) -> f64 {
        1.0 - self.cdf(gap)
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64;
}

/// Maps a history of generated events to the law of the next gap.
///
/// Implementations are shared read-only between particle workers.
pub trait SequenceModel: Sync {
    type Gap: InterArrival;

    fn next_gap(&self, history: &[f64]) -> Result<Self::Gap>;

    /// Snaps a time onto the model's support. Lattice models round to the
    /// nearest lattice point so that barrier comparisons are exact.
    fn quantize(&self, t: f64) -> f64 {
        t
    }
}

/// Subsequence of `seq` lying in `interval`, in original order.
pub fn restrict<I: RangeBounds<f64>>(seq: &EventSequence, interval: I) -> EventSequence {
    EventSequence(seq.iter().filter(|t| interval.contains(t)).collect())
}

/// Splits `seq` into the `R + 1` pieces lying in `(z_{i-1}, z_i]`, with
/// `z_0 = -inf` and `z_{R+1} = +inf`. Concatenating the pieces gives `seq`.
pub fn partition(seq: &EventSequence, z: &[f64]) -> Result<Vec<EventSequence>> {
    if let Some(i) = z.windows(2).position(|w| w[0] >= w[1] || w[0].is_nan()) {
        return Err(Error::InvalidConstraints(format!(
            "partition points not strictly increasing at index {}",
            i + 1
        )));
    }
    let mut parts = vec![Vec::new(); z.len() + 1];
    let mut segment = 0;
    for t in seq.iter() {
        while segment < z.len() && t > z[segment] {
            segment += 1;
        }
        parts[segment].push(t);
    }
    Ok(parts.into_iter().map(EventSequence).collect())
}

/// Draws from the process restricted to `[0, 1]`: events are generated until
/// the first one past 1, which is dropped.
pub fn sample_restricted<M, R>(model: &M, rng: &mut R, max_events: usize) -> Result<EventSequence>
where
    M: SequenceModel,
    R: Rng + ?Sized,
{
    let mut history = Vec::new();
    loop {
        let last = last_or_origin(&history);
        let gap = model.next_gap(&history)?.sample(rng);
        let next = model.quantize(last + gap);
        check_advance(last, next)?;
        if next > 1.0 {
            return Ok(EventSequence(history));
        }
        if history.len() >= max_events {
            return Err(Error::IterationCap { cap: max_events });
        }
        history.push(next);
    }
}

pub(crate) fn check_advance(last: f64, next: f64) -> Result<()> {
    if next > last {
        Ok(())
    } else {
        Err(Error::Model(format!(
            "sampled gap did not advance time past {last} (got {next})"
        )))
    }
}

/// `ln f(next - last | history)`; `-inf` when the density vanishes.
pub fn log_density<M: SequenceModel>(model: &M, history: &[f64], next: f64) -> Result<f64> {
    let gap = next - last_or_origin(history);
    if gap <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(model.next_gap(history)?.pdf(gap).ln())
}

/// Sum of log conditional densities of the events of `seq`.
///
/// A vanishing factor yields [`Error::ZeroProbability`] carrying the 0-based
/// index of the offending event.
pub fn log_probability<M: SequenceModel>(model: &M, seq: &[f64]) -> Result<f64> {
    let mut total = 0.0;
    for step in 0..seq.len() {
        let term = log_density(model, &seq[..step], seq[step])?;
        if term == f64::NEG_INFINITY {
            return Err(Error::ZeroProbability { step });
        }
        total += term;
    }
    Ok(total)
}

/// `f(d) / P(D >= d)`, zero when the density vanishes.
pub fn hazard<G: InterArrival>(gap_law: &G, gap: f64) -> Result<f64> {
    let density = gap_law.pdf(gap);
    if density == 0.0 {
        return Ok(0.0);
    }
    let survival = gap_law.survival(gap);
    if survival.is_nan() || survival <= SURVIVAL_FLOOR {
        return Err(Error::SaturatedCdf { gap });
    }
    Ok(density / survival)
}

/// Conditional intensity at time `t` given the events in `history`.
pub fn conditional_intensity<M: SequenceModel>(model: &M, history: &[f64], t: f64) -> Result<f64> {
    let last = last_or_origin(history);
    if t.is_nan() || t <= last {
        return Err(Error::NotAfterHistory { t, last });
    }
    hazard(&model.next_gap(history)?, t - last)
}
