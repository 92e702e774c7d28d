//! Symbolic music as a one-dimensional point process.
//!
//! A note event `(t, a)` at tick `t` with action `a` is unrolled to the integer
//! code `e = t * a_max + a`, so events ordered canonically (by tick, then by
//! ascending action) have strictly increasing codes. A discrete step model
//! emits symbols that are either an action at the current tick or a shift
//! forward in time; a constant mask keeps the symbol stream canonical.

mod adapter;
pub mod io;
pub mod midi;
mod ngram;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use adapter::{MusicGap, MusicSequenceModel};
pub use ngram::{train_ngram, BigramTable, NGramModel};

/// Ticks per quarter note.
pub const TICKS_PER_QUARTER: u64 = 2400;

/// Actions per part: note-on for pitches 1..=128, note-off for 129..=256.
pub const MIDI_ACTIONS: u32 = 256;

/// Symbol and action layout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    actions_per_part: u32,
    parts: u32,
    s_max: u32,
}

impl Vocabulary {
    pub fn new(actions_per_part: u32, parts: u32, s_max: u32) -> Result<Self> {
        if actions_per_part == 0 || parts == 0 || s_max == 0 {
            return Err(Error::InvalidEvent(format!(
                "vocabulary sizes must be positive (actions {actions_per_part}, parts {parts}, s_max {s_max})"
            )));
        }
        Ok(Self {
            actions_per_part,
            parts,
            s_max,
        })
    }

    /// 256 actions per part.
    pub fn midi(parts: u32, s_max: u32) -> Result<Self> {
        Self::new(MIDI_ACTIONS, parts, s_max)
    }

    pub fn actions_per_part(&self) -> u32 {
        self.actions_per_part
    }

    pub fn parts(&self) -> u32 {
        self.parts
    }

    /// Largest single time shift.
    pub fn s_max(&self) -> u32 {
        self.s_max
    }

    /// Total number of actions across parts.
    pub fn a_max(&self) -> u32 {
        self.actions_per_part * self.parts
    }

    /// Symbols in the vocabulary: all actions followed by all shifts.
    pub fn size(&self) -> usize {
        (self.a_max() + self.s_max) as usize
    }

    /// 1-based action index of an event across parts.
    pub fn action_index(&self, ev: &MusicEvent) -> Result<u32> {
        if ev.a == 0 || ev.a > self.actions_per_part {
            return Err(Error::InvalidEvent(format!(
                "action {} outside [1, {}]",
                ev.a, self.actions_per_part
            )));
        }
        if ev.part >= self.parts {
            return Err(Error::InvalidEvent(format!(
                "part {} outside [0, {})",
                ev.part, self.parts
            )));
        }
        Ok(ev.part * self.actions_per_part + ev.a)
    }

    pub fn encode(&self, ev: &MusicEvent) -> Result<u64> {
        let idx = self.action_index(ev)?;
        ev.t.checked_mul(u64::from(self.a_max()))
            .and_then(|c| c.checked_add(u64::from(idx)))
            .ok_or_else(|| Error::InvalidEvent(format!("tick {} overflows the code range", ev.t)))
    }

    /// Inverse of [`encode`](Self::encode). Actions are 1-based, so a zero
    /// residue is the last action of the previous tick.
    pub fn decode(&self, code: u64) -> Result<MusicEvent> {
        let (tick, idx) = self.position(code)?;
        let part = (idx - 1) / self.actions_per_part;
        Ok(MusicEvent {
            t: tick,
            a: (idx - 1) % self.actions_per_part + 1,
            part,
        })
    }

    /// `(tick, action index)` of a code; code 0 is rejected.
    pub fn position(&self, code: u64) -> Result<(u64, u32)> {
        if code == 0 {
            return Err(Error::InvalidEvent(
                "code 0 is the origin, not an event".into(),
            ));
        }
        let a_max = u64::from(self.a_max());
        Ok(match code % a_max {
            0 => (code / a_max - 1, self.a_max()),
            r => (code / a_max, r as u32),
        })
    }

    pub fn symbol_index(&self, s: Symbol) -> usize {
        match s {
            Symbol::Action(a) => (a - 1) as usize,
            Symbol::Shift(dt) => (self.a_max() + dt - 1) as usize,
        }
    }

    pub fn symbol_at(&self, index: usize) -> Symbol {
        let a_max = self.a_max() as usize;
        if index < a_max {
            Symbol::Action(index as u32 + 1)
        } else {
            Symbol::Shift((index - a_max) as u32 + 1)
        }
    }

    fn check_symbol(&self, s: Symbol) -> Result<()> {
        let ok = match s {
            Symbol::Action(a) => a >= 1 && a <= self.a_max(),
            Symbol::Shift(dt) => dt >= 1 && dt <= self.s_max,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidEvent(format!("{s:?} outside the vocabulary")))
        }
    }
}

/// A note-on or note-off at tick `t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MusicEvent {
    pub t: u64,
    pub a: u32,
    #[serde(default)]
    pub part: u32,
}

impl MusicEvent {
    pub fn new(t: u64, a: u32, part: u32) -> Self {
        Self { t, a, part }
    }

    pub fn is_note_on(&self) -> bool {
        (1..=128).contains(&self.a)
    }

    /// Pitch 1..=128 for MIDI-layout actions.
    pub fn pitch(&self) -> u32 {
        if self.is_note_on() {
            self.a
        } else {
            self.a - 128
        }
    }
}

/// One step of the model's output stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    /// 1-based action index across parts.
    Action(u32),
    /// Forward shift in ticks, `1..=s_max`.
    Shift(u32),
}

/// Position of the most recent event: tick and action (action 0 at the origin).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Position {
    pub tick: u64,
    pub action: u32,
}

impl Position {
    pub const ORIGIN: Position = Position { tick: 0, action: 0 };

    pub fn code(&self, vocab: &Vocabulary) -> u64 {
        self.tick * u64::from(vocab.a_max()) + u64::from(self.action)
    }

    pub fn of_code(vocab: &Vocabulary, code: u64) -> Result<Position> {
        if code == 0 {
            return Ok(Position::ORIGIN);
        }
        let (tick, action) = vocab.position(code)?;
        Ok(Position { tick, action })
    }
}

/// Sorts events by tick and action index and rejects duplicates.
pub fn canonicalize(vocab: &Vocabulary, mut events: Vec<MusicEvent>) -> Result<Vec<MusicEvent>> {
    for ev in &events {
        vocab.action_index(ev)?;
    }
    events.sort_by_key(|ev| (ev.t, ev.part * vocab.actions_per_part + ev.a));
    if let Some(w) = events.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::InvalidEvent(format!("duplicate event {:?}", w[0])));
    }
    Ok(events)
}

/// Appends the symbols that move from `pos` to the event with `code`.
pub(crate) fn push_code_symbols(
    vocab: &Vocabulary,
    pos: &mut Position,
    code: u64,
    out: &mut Vec<Symbol>,
) -> Result<()> {
    let next = Position::of_code(vocab, code)?;
    if next.tick > pos.tick {
        let dt = next.tick - pos.tick;
        if dt > u64::from(vocab.s_max) {
            return Err(Error::Corpus(format!(
                "gap of {dt} ticks exceeds s_max = {}",
                vocab.s_max
            )));
        }
        out.push(Symbol::Shift(dt as u32));
    } else if next.tick < pos.tick || next.action <= pos.action {
        return Err(Error::InvalidEvent(format!(
            "code {code} does not follow tick {} action {}",
            pos.tick, pos.action
        )));
    }
    out.push(Symbol::Action(next.action));
    *pos = next;
    Ok(())
}

/// Canonical symbol stream for canonically ordered events.
pub fn events_to_symbols(vocab: &Vocabulary, events: &[MusicEvent]) -> Result<Vec<Symbol>> {
    let mut pos = Position::ORIGIN;
    let mut out = Vec::with_capacity(events.len() * 2);
    for ev in events {
        push_code_symbols(vocab, &mut pos, vocab.encode(ev)?, &mut out)?;
    }
    Ok(out)
}

/// Inverse of [`events_to_symbols`]. Rejects non-canonical streams and a
/// trailing shift with no action after it.
pub fn symbols_to_events(vocab: &Vocabulary, symbols: &[Symbol]) -> Result<Vec<MusicEvent>> {
    if !is_canonical(symbols) {
        return Err(Error::InvalidEvent("symbol stream is not canonical".into()));
    }
    if matches!(symbols.last(), Some(Symbol::Shift(_))) {
        return Err(Error::InvalidEvent(
            "dangling shift at end of stream".into(),
        ));
    }
    let mut tick = 0u64;
    let mut out = Vec::new();
    for &s in symbols {
        vocab.check_symbol(s)?;
        match s {
            Symbol::Shift(dt) => tick += u64::from(dt),
            Symbol::Action(idx) => {
                out.push(vocab.decode(tick * u64::from(vocab.a_max()) + u64::from(idx))?)
            }
        }
    }
    Ok(out)
}

/// No shift follows a shift and actions ascend strictly within a tick.
pub fn is_canonical(symbols: &[Symbol]) -> bool {
    symbols.windows(2).all(|w| match (w[0], w[1]) {
        (Symbol::Shift(_), Symbol::Shift(_)) => false,
        (Symbol::Action(a), Symbol::Action(b)) => b > a,
        _ => true,
    })
}

/// Adds the canonical-representation mask for the symbol preceding the next
/// one: after a shift every shift is forbidden; after action `a` every action
/// `<= a` is forbidden. At the start of a stream nothing is masked.
pub fn apply_mask(vocab: &Vocabulary, logits: &mut [f64], prev: Option<Symbol>) {
    let a_max = vocab.a_max() as usize;
    match prev {
        None => {}
        Some(Symbol::Shift(_)) => logits[a_max..].fill(f64::NEG_INFINITY),
        Some(Symbol::Action(a)) => logits[..a as usize].fill(f64::NEG_INFINITY),
    }
}

/// Next-symbol model over a [`Vocabulary`].
pub trait DiscreteStepModel: Send + Sync {
    fn vocabulary(&self) -> &Vocabulary;

    /// Unmasked log-weights for the next symbol, one per vocabulary entry.
    fn logits(&self, history: &[Symbol]) -> Result<Vec<f64>>;
}

impl<M: DiscreteStepModel + ?Sized> DiscreteStepModel for std::sync::Arc<M> {
    fn vocabulary(&self) -> &Vocabulary {
        (**self).vocabulary()
    }

    fn logits(&self, history: &[Symbol]) -> Result<Vec<f64>> {
        (**self).logits(history)
    }
}

/// Softmax with `-inf` entries mapped to exactly zero.
pub fn softmax(logits: &[f64]) -> Result<Vec<f64>> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY || max.is_nan() {
        return Err(Error::Model("no symbol has positive probability".into()));
    }
    let mut p: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|v| *v /= total);
    Ok(p)
}

/// Masked, renormalized next-symbol distribution.
pub fn masked_pmf<M: DiscreteStepModel + ?Sized>(
    model: &M,
    history: &[Symbol],
) -> Result<Vec<f64>> {
    let vocab = model.vocabulary();
    let mut logits = model.logits(history)?;
    if logits.len() != vocab.size() {
        return Err(Error::Model(format!(
            "model returned {} logits for a vocabulary of {}",
            logits.len(),
            vocab.size()
        )));
    }
    apply_mask(vocab, &mut logits, history.last().copied());
    softmax(&logits)
}

pub(crate) fn sample_index<R: Rng + ?Sized>(pmf: &[f64], rng: &mut R) -> usize {
    let u = rng.random::<f64>();
    let mut acc = 0.0;
    let mut last_live = 0;
    for (i, &p) in pmf.iter().enumerate() {
        if p > 0.0 {
            acc += p;
            last_live = i;
            if u < acc {
                return i;
            }
        }
    }
    last_live
}

/// Draws `len` symbols from the masked model.
pub fn sample_symbols<M, R>(model: &M, len: usize, rng: &mut R) -> Result<Vec<Symbol>>
where
    M: DiscreteStepModel + ?Sized,
    R: Rng + ?Sized,
{
    let vocab = *model.vocabulary();
    let mut out = Vec::with_capacity(len);
    for _ in 0..len {
        let pmf = masked_pmf(model, &out)?;
        out.push(vocab.symbol_at(sample_index(&pmf, rng)));
    }
    Ok(out)
}

/// Probability of the next event landing exactly on a code, the cdf up to and
/// including it, and the tail mass at or beyond it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepQuantities {
    pub pdf: f64,
    pub cdf: f64,
    pub tail: f64,
}

/// Next-event quantities for the event with code `target`, given the symbol
/// history ending at `last` and its masked next-symbol pmf `f_x`.
pub(crate) fn step_quantities_with<M: DiscreteStepModel + ?Sized>(
    model: &M,
    history: &[Symbol],
    f_x: &[f64],
    last: Position,
    target: u64,
) -> Result<StepQuantities> {
    let vocab = model.vocabulary();
    let a_max = vocab.a_max() as usize;
    if target <= last.code(vocab) {
        return Err(Error::InvalidEvent(format!(
            "target code {target} does not follow the last event"
        )));
    }
    let z = Position::of_code(vocab, target)?;
    let actions = &f_x[..a_max];
    let shifts = &f_x[a_max..];
    let from = last.action as usize;

    if z.tick == last.tick {
        let at = z.action as usize;
        return Ok(StepQuantities {
            pdf: actions[at - 1],
            cdf: actions[from..at].iter().sum(),
            tail: actions[at - 1..].iter().sum::<f64>() + shifts.iter().sum::<f64>(),
        });
    }

    let dt = (z.tick - last.tick) as usize;
    let same_tick: f64 = actions[from..].iter().sum();
    if dt > shifts.len() {
        return Ok(StepQuantities {
            pdf: 0.0,
            cdf: same_tick + shifts.iter().sum::<f64>(),
            tail: 0.0,
        });
    }
    let shorter: f64 = shifts[..dt - 1].iter().sum();
    let longer: f64 = shifts[dt..].iter().sum();
    let p_shift = shifts[dt - 1];
    if p_shift == 0.0 {
        return Ok(StepQuantities {
            pdf: 0.0,
            cdf: same_tick + shorter,
            tail: longer,
        });
    }
    let mut shifted = history.to_vec();
    shifted.push(Symbol::Shift(dt as u32));
    let f_z = masked_pmf(model, &shifted)?;
    let at = z.action as usize;
    Ok(StepQuantities {
        pdf: p_shift * f_z[at - 1],
        cdf: same_tick + shorter + p_shift * f_z[..at].iter().sum::<f64>(),
        tail: longer + p_shift * f_z[at - 1..a_max].iter().sum::<f64>(),
    })
}

/// Next-event quantities for the event `z` after `history` (canonical events).
pub fn step_quantities<M: DiscreteStepModel + ?Sized>(
    model: &M,
    history: &[MusicEvent],
    z: &MusicEvent,
) -> Result<StepQuantities> {
    let vocab = model.vocabulary();
    let symbols = events_to_symbols(vocab, history)?;
    let last = match history.last() {
        Some(ev) => Position::of_code(vocab, vocab.encode(ev)?)?,
        None => Position::ORIGIN,
    };
    let f_x = masked_pmf(model, &symbols)?;
    step_quantities_with(model, &symbols, &f_x, last, vocab.encode(z)?)
}

/// Probability that the next event is exactly `z`.
pub fn step_pdf_at_constraint<M: DiscreteStepModel + ?Sized>(
    model: &M,
    history: &[MusicEvent],
    z: &MusicEvent,
) -> Result<f64> {
    Ok(step_quantities(model, history, z)?.pdf)
}

/// Probability that the next event's code is at most that of `z`.
pub fn step_cdf_at_constraint<M: DiscreteStepModel + ?Sized>(
    model: &M,
    history: &[MusicEvent],
    z: &MusicEvent,
) -> Result<f64> {
    Ok(step_quantities(model, history, z)?.cdf)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn midi() -> Vocabulary {
        Vocabulary::midi(1, 2400).unwrap()
    }

    /// Logits drawn once per history length from a fixed seed.
    struct Scrambled {
        vocab: Vocabulary,
    }

    impl DiscreteStepModel for Scrambled {
        fn vocabulary(&self) -> &Vocabulary {
            &self.vocab
        }

        fn logits(&self, history: &[Symbol]) -> Result<Vec<f64>> {
            let mut key = history.len() as u64;
            for s in history {
                key = key
                    .wrapping_mul(31)
                    .wrapping_add(self.vocab.symbol_index(*s) as u64 + 7);
            }
            let mut rng = ChaCha8Rng::seed_from_u64(key);
            Ok((0..self.vocab.size())
                .map(|_| rng.random_range(-2.0..2.0))
                .collect())
        }
    }

    struct Uniform {
        vocab: Vocabulary,
    }

    impl DiscreteStepModel for Uniform {
        fn vocabulary(&self) -> &Vocabulary {
            &self.vocab
        }

        fn logits(&self, _: &[Symbol]) -> Result<Vec<f64>> {
            Ok(vec![0.0; self.vocab.size()])
        }
    }

    #[test]
    fn encode_examples() {
        let v = midi();
        assert_eq!(v.encode(&MusicEvent::new(3, 5, 0)).unwrap(), 773);
        assert_eq!(v.encode(&MusicEvent::new(0, 1, 0)).unwrap(), 1);
        assert_eq!(v.encode(&MusicEvent::new(1, 256, 0)).unwrap(), 512);
        assert!(v.encode(&MusicEvent::new(1, 0, 0)).is_err());
        assert!(v.encode(&MusicEvent::new(1, 257, 0)).is_err());
        assert!(v.encode(&MusicEvent::new(1, 3, 1)).is_err());
    }

    #[test]
    fn decode_examples() {
        let v = midi();
        assert_eq!(v.decode(773).unwrap(), MusicEvent::new(3, 5, 0));
        assert_eq!(v.decode(512).unwrap(), MusicEvent::new(1, 256, 0));
        assert_eq!(v.decode(256).unwrap(), MusicEvent::new(0, 256, 0));
        assert!(v.decode(0).is_err());
    }

    #[test]
    fn decode_is_bijective_on_small_codes() {
        let v = midi();
        let mut seen = std::collections::HashSet::new();
        for e in 1..=100_000u64 {
            let ev = v.decode(e).unwrap();
            assert!(ev.a >= 1 && ev.a <= 256);
            assert_eq!(v.encode(&ev).unwrap(), e);
            assert!(seen.insert(ev));
        }
    }

    #[test]
    fn parts_expand_actions() {
        let v = Vocabulary::midi(2, 16).unwrap();
        assert_eq!(v.a_max(), 512);
        let ev = MusicEvent::new(2, 7, 1);
        let code = v.encode(&ev).unwrap();
        assert_eq!(code, 2 * 512 + 256 + 7);
        assert_eq!(v.decode(code).unwrap(), ev);
    }

    #[test]
    fn mask_examples() {
        let v = Vocabulary::new(4, 1, 3).unwrap();
        let mut l = vec![0.5; 7];
        apply_mask(&v, &mut l, Some(Symbol::Shift(2)));
        assert_eq!(&l[..4], &[0.5; 4]);
        assert!(l[4..].iter().all(|x| *x == f64::NEG_INFINITY));

        let mut l = vec![0.5; 7];
        apply_mask(&v, &mut l, Some(Symbol::Action(2)));
        assert!(l[..2].iter().all(|x| *x == f64::NEG_INFINITY));
        assert_eq!(&l[2..], &[0.5; 5]);

        let mut l = vec![0.5; 7];
        apply_mask(&v, &mut l, None);
        assert_eq!(l, vec![0.5; 7]);
    }

    #[test]
    fn mask_on_midi_vocab() {
        let v = midi();
        let mut l = vec![0.0; v.size()];
        apply_mask(&v, &mut l, Some(Symbol::Action(10)));
        assert!(l[..10].iter().all(|x| *x == f64::NEG_INFINITY));
        assert!(l[10..].iter().all(|x| *x == 0.0));
    }

    #[test]
    fn masked_pmf_is_normalized() {
        let model = Scrambled {
            vocab: Vocabulary::new(6, 2, 5).unwrap(),
        };
        let hist = [Symbol::Action(3), Symbol::Shift(2), Symbol::Action(8)];
        for k in 0..=hist.len() {
            let p = masked_pmf(&model, &hist[..k]).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            if k == 3 {
                assert!(p[..8].iter().all(|&x| x == 0.0));
            }
            if k == 2 {
                assert!(p[12..].iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn same_tick_quantities_with_uniform_actions() {
        let v = Vocabulary::new(256, 1, 8).unwrap();
        let model = Uniform { vocab: v };
        let hist = [MusicEvent::new(0, 4, 0)];
        let q = step_quantities(&model, &hist, &MusicEvent::new(0, 6, 0)).unwrap();
        // after action 4: 252 actions and 8 shifts remain
        let p = 1.0 / 260.0;
        assert!((q.pdf - p).abs() < 1e-15);
        assert!((q.cdf - 2.0 * p).abs() < 1e-15);
        assert!((q.tail - (1.0 - q.cdf + q.pdf)).abs() < 1e-12);
    }

    #[test]
    fn events_symbols_roundtrip() {
        let v = Vocabulary::new(4, 2, 3).unwrap();
        let events = vec![
            MusicEvent::new(0, 2, 0),
            MusicEvent::new(0, 1, 1),
            MusicEvent::new(3, 4, 0),
            MusicEvent::new(5, 1, 0),
            MusicEvent::new(5, 3, 1),
        ];
        let symbols = events_to_symbols(&v, &events).unwrap();
        assert_eq!(
            symbols,
            vec![
                Symbol::Action(2),
                Symbol::Action(5),
                Symbol::Shift(3),
                Symbol::Action(4),
                Symbol::Shift(2),
                Symbol::Action(1),
                Symbol::Action(7),
            ]
        );
        assert_eq!(symbols_to_events(&v, &symbols).unwrap(), events);
        // gap larger than s_max is unrepresentable
        assert!(events_to_symbols(&v, &[MusicEvent::new(4, 1, 0)]).is_err());
        assert!(symbols_to_events(&v, &[Symbol::Shift(1), Symbol::Shift(1)]).is_err());
        assert!(symbols_to_events(&v, &[Symbol::Action(1), Symbol::Shift(1)]).is_err());
    }

    #[test]
    fn canonicalize_sorts_and_rejects_duplicates() {
        let v = Vocabulary::midi(2, 100).unwrap();
        let evs = vec![
            MusicEvent::new(5, 3, 0),
            MusicEvent::new(1, 9, 1),
            MusicEvent::new(1, 200, 0),
        ];
        let c = canonicalize(&v, evs).unwrap();
        assert_eq!(c[0], MusicEvent::new(1, 200, 0));
        assert_eq!(c[1], MusicEvent::new(1, 9, 1));
        assert!(canonicalize(&v, vec![MusicEvent::new(1, 1, 0); 2]).is_err());
    }

    fn canonical_symbols(v: Vocabulary) -> impl Strategy<Value = Vec<Symbol>> {
        prop::collection::vec(
            (
                0u32..=v.s_max(),
                prop::collection::btree_set(1..=v.a_max(), 1..4),
            ),
            0..10,
        )
        .prop_map(|groups| {
            let mut out = Vec::new();
            for (i, (shift, actions)) in groups.into_iter().enumerate() {
                if shift > 0 && i > 0 {
                    out.push(Symbol::Shift(shift));
                } else if i > 0 {
                    out.push(Symbol::Shift(1));
                }
                out.extend(actions.into_iter().map(Symbol::Action));
            }
            out
        })
    }

    proptest! {
        #[test]
        fn symbol_event_bijection(symbols in canonical_symbols(Vocabulary::new(5, 2, 4).unwrap())) {
            let v = Vocabulary::new(5, 2, 4).unwrap();
            let events = symbols_to_events(&v, &symbols).unwrap();
            prop_assert_eq!(events_to_symbols(&v, &events).unwrap(), symbols);
        }

        #[test]
        fn encode_decode_roundtrip(t in 0u64..1_000_000, a in 1u32..=256, part in 0u32..3) {
            let v = Vocabulary::midi(3, 2400).unwrap();
            let ev = MusicEvent::new(t, a, part);
            prop_assert_eq!(v.decode(v.encode(&ev).unwrap()).unwrap(), ev);
        }
    }

    #[test]
    fn sampled_symbols_are_canonical() {
        let model = Scrambled {
            vocab: Vocabulary::new(4, 1, 3).unwrap(),
        };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let s = sample_symbols(&model, 30, &mut rng).unwrap();
            assert!(is_canonical(&s));
        }
    }
}
