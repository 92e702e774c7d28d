use std::sync::Arc;

use rand::Rng;

use super::{
    masked_pmf, push_code_symbols, sample_index, step_quantities_with, DiscreteStepModel,
    MusicEvent, Position, StepQuantities, Symbol, Vocabulary,
};
use crate::error::{Error, Result};
use crate::process::{InterArrival, SequenceModel};

/// Runs a discrete step model as a point process on the unit interval.
///
/// Unrolled codes after an optional conditioning prefix are mapped to unit
/// time by `x = (code - base) / span`, where `base` is the code of the last
/// prefix event (0 without a prefix). Times are quantized back onto that
/// lattice, so a required code maps to the same float the sampler produces.
#[derive(Debug, Clone)]
pub struct MusicSequenceModel<M> {
    model: Arc<M>,
    vocab: Vocabulary,
    prefix: Vec<Symbol>,
    base: Position,
    span: u64,
}

impl<M: DiscreteStepModel> MusicSequenceModel<M> {
    /// `horizon_code` is the largest code that may be generated; it maps to 1.
    pub fn new(model: M, prefix: &[MusicEvent], horizon_code: u64) -> Result<Self> {
        Self::from_shared(Arc::new(model), prefix, horizon_code)
    }

    pub fn from_shared(model: Arc<M>, prefix: &[MusicEvent], horizon_code: u64) -> Result<Self> {
        let vocab = *model.vocabulary();
        let mut pos = Position::ORIGIN;
        let mut symbols = Vec::with_capacity(prefix.len() * 2);
        for ev in prefix {
            push_code_symbols(&vocab, &mut pos, vocab.encode(ev)?, &mut symbols)?;
        }
        let base_code = pos.code(&vocab);
        if horizon_code <= base_code {
            return Err(Error::Model(format!(
                "horizon code {horizon_code} does not exceed the prefix end {base_code}"
            )));
        }
        Ok(Self {
            model,
            vocab,
            prefix: symbols,
            base: pos,
            span: horizon_code - base_code,
        })
    }

    /// Horizon covering every event up to and including tick `tick`.
    pub fn horizon_for_tick(vocab: &Vocabulary, tick: u64) -> u64 {
        (tick + 1) * u64::from(vocab.a_max())
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn inner(&self) -> &M {
        &self.model
    }

    pub fn base_code(&self) -> u64 {
        self.base.code(&self.vocab)
    }

    pub fn time_of_code(&self, code: u64) -> Result<f64> {
        let base = self.base_code();
        if code <= base || code - base > self.span {
            return Err(Error::InvalidEvent(format!(
                "code {code} outside the sampling window ({base}, {}]",
                base + self.span
            )));
        }
        Ok((code - base) as f64 / self.span as f64)
    }

    pub fn code_of_time(&self, t: f64) -> u64 {
        let offset = (t * self.span as f64).round().max(0.0) as u64;
        self.base_code() + offset
    }

    pub fn time_of_event(&self, ev: &MusicEvent) -> Result<f64> {
        self.time_of_code(self.vocab.encode(ev)?)
    }

    pub fn events_of_times(&self, times: &[f64]) -> Result<Vec<MusicEvent>> {
        times
            .iter()
            .map(|&t| self.vocab.decode(self.code_of_time(t)))
            .collect()
    }

    /// Symbol stream (prefix included) for a history of unit times.
    pub fn symbols_for(&self, history: &[f64]) -> Result<(Vec<Symbol>, Position)> {
        let mut symbols = self.prefix.clone();
        let mut pos = self.base;
        for &t in history {
            push_code_symbols(&self.vocab, &mut pos, self.code_of_time(t), &mut symbols)?;
        }
        Ok((symbols, pos))
    }
}

/// Law of the next unrolled event given a symbol history.
#[derive(Debug, Clone)]
pub struct MusicGap<M> {
    model: Arc<M>,
    symbols: Vec<Symbol>,
    last: Position,
    span: u64,
    f_x: Vec<f64>,
}

impl<M: DiscreteStepModel> MusicGap<M> {
    fn target(&self, gap: f64) -> Option<u64> {
        let steps = (gap * self.span as f64).round();
        (steps >= 1.0).then(|| self.last.code(self.model.vocabulary()) + steps as u64)
    }

    /// Table quantities for the event `gap` after the last one.
    pub fn quantities(&self, gap: f64) -> Result<Option<StepQuantities>> {
        match self.target(gap) {
            Some(code) => {
                step_quantities_with(&*self.model, &self.symbols, &self.f_x, self.last, code)
                    .map(Some)
            }
            None => Ok(None),
        }
    }

    fn eval(&self, gap: f64) -> StepQuantities {
        // A model failure here is a bug in the model; report it as zero mass.
        self.quantities(gap)
            .ok()
            .flatten()
            .unwrap_or(StepQuantities {
                pdf: 0.0,
                cdf: 0.0,
                tail: 1.0,
            })
    }
}

impl<M: DiscreteStepModel> InterArrival for MusicGap<M> {
    /// Probability mass of the event exactly `gap` after the last one.
    fn pdf(&self, gap: f64) -> f64 {
        self.eval(gap).pdf
    }

    fn cdf(&self, gap: f64) -> f64 {
        self.eval(gap).cdf
    }

    /// `P(next code >= target)`, including the atom at the target.
    fn survival(&self, gap: f64) -> f64 {
        self.eval(gap).tail
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let vocab = self.model.vocabulary();
        let a_max = u64::from(vocab.a_max());
        let code = match vocab.symbol_at(sample_index(&self.f_x, rng)) {
            Symbol::Action(a) => self.last.tick * a_max + u64::from(a),
            Symbol::Shift(dt) => {
                let mut shifted = self.symbols.clone();
                shifted.push(Symbol::Shift(dt));
                let action = masked_pmf(&*self.model, &shifted)
                    .map(|f_z| sample_index(&f_z, rng) as u64 + 1)
                    .unwrap_or(1);
                (self.last.tick + u64::from(dt)) * a_max + action
            }
        };
        (code - self.last.code(vocab)) as f64 / self.span as f64
    }
}

impl<M: DiscreteStepModel> SequenceModel for MusicSequenceModel<M> {
    type Gap = MusicGap<M>;

    fn next_gap(&self, history: &[f64]) -> Result<MusicGap<M>> {
        let (symbols, last) = self.symbols_for(history)?;
        let f_x = masked_pmf(&*self.model, &symbols)?;
        Ok(MusicGap {
            model: Arc::clone(&self.model),
            symbols,
            last,
            span: self.span,
            f_x,
        })
    }

    fn quantize(&self, t: f64) -> f64 {
        (t * self.span as f64).round() / self.span as f64
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::music::{events_to_symbols, is_canonical, BigramTable};
    use crate::process::{conditional_intensity, sample_restricted, DEFAULT_MAX_EVENTS};
    use crate::rng::StreamFactory;
    use crate::smc::{barrier_weight, conditional_sample, ConstraintSet, SmcConfig};

    fn table(seed: u64) -> BigramTable {
        let v = Vocabulary::new(4, 1, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = (0..=v.size())
            .map(|_| (0..v.size()).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        BigramTable::new(v, rows).unwrap()
    }

    #[test]
    fn unconditional_samples_are_canonical() {
        let m = table(1);
        let v = *m.vocabulary();
        let adapter = MusicSequenceModel::new(m, &[], 40 * 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..300 {
            let x = sample_restricted(&adapter, &mut rng, DEFAULT_MAX_EVENTS).unwrap();
            let events = adapter.events_of_times(x.as_slice()).unwrap();
            let symbols = events_to_symbols(&v, &events).unwrap();
            assert!(is_canonical(&symbols));
        }
    }

    #[test]
    fn hazard_matches_barrier_weight() {
        let m = table(4);
        let adapter = MusicSequenceModel::new(m, &[MusicEvent::new(0, 2, 0)], 200).unwrap();
        let hist: Vec<f64> = [MusicEvent::new(1, 1, 0), MusicEvent::new(1, 3, 0)]
            .iter()
            .map(|e| adapter.time_of_event(e).unwrap())
            .collect();
        let z = adapter.time_of_event(&MusicEvent::new(3, 2, 0)).unwrap();
        let mut seq = hist.clone();
        seq.push(z);
        let gap = z - hist[1];
        let w = barrier_weight(&adapter, &seq, gap, true, false).unwrap();
        let h = conditional_intensity(&adapter, &hist, z).unwrap();
        assert_eq!(w, h);
        let q = adapter
            .next_gap(&hist)
            .unwrap()
            .quantities(gap)
            .unwrap()
            .unwrap();
        assert!((w - q.pdf / (1.0 - q.cdf + q.pdf)).abs() < 1e-12 * w);
    }

    #[test]
    fn forced_flags_reproduce_constraints() {
        let m = table(7);
        let adapter = MusicSequenceModel::new(m, &[], 60).unwrap();
        // the first event sits at the first code, so nothing can precede it
        let events = [
            MusicEvent::new(0, 1, 0),
            MusicEvent::new(2, 1, 0),
            MusicEvent::new(2, 4, 0),
            MusicEvent::new(5, 2, 0),
        ];
        let z: Vec<f64> = events
            .iter()
            .map(|e| adapter.time_of_event(e).unwrap())
            .collect();
        let c = ConstraintSet::new(z, vec![false; 4]).unwrap();
        let res =
            conditional_sample(&adapter, &c, &SmcConfig::new(8), &StreamFactory::new(3)).unwrap();
        assert!(res.survived);
        for x in &res.samples {
            assert_eq!(adapter.events_of_times(x.as_slice()).unwrap(), events);
        }
    }

    #[test]
    fn window_checks() {
        let adapter = MusicSequenceModel::new(table(0), &[MusicEvent::new(1, 1, 0)], 40).unwrap();
        assert_eq!(adapter.base_code(), 5);
        assert!(adapter.time_of_code(5).is_err());
        assert!(adapter.time_of_code(41).is_err());
        assert_eq!(adapter.time_of_code(40).unwrap(), 1.0);
        assert!(MusicSequenceModel::new(table(0), &[MusicEvent::new(9, 1, 0)], 20).is_err());
    }
}
