//! Particle sampler on the music adapter against exact enumeration of every
//! event set inside a short window.

use ppsmc::music::{
    events_to_symbols, masked_pmf, BigramTable, DiscreteStepModel, MusicEvent, MusicSequenceModel,
    Symbol, Vocabulary,
};
use ppsmc::oracle::total_variation;
use ppsmc::{conditional_sample, ConstraintSet, SmcConfig, StreamFactory};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const HORIZON: u64 = 8;

fn model() -> BigramTable {
    let v = Vocabulary::new(2, 1, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let rows = (0..=v.size())
        .map(|_| (0..v.size()).map(|_| rng.random_range(-1.5..1.5)).collect())
        .collect();
    BigramTable::new(v, rows).unwrap()
}

fn decode(v: &Vocabulary, code: u64) -> MusicEvent {
    v.decode(code).unwrap()
}

/// Probability of each code being the next event after `codes`.
fn next_code_law(m: &BigramTable, codes: &[u64]) -> Vec<(u64, f64)> {
    let v = *m.vocabulary();
    let a_max = u64::from(v.a_max());
    let events: Vec<MusicEvent> = codes.iter().map(|&c| decode(&v, c)).collect();
    let symbols = events_to_symbols(&v, &events).unwrap();
    let (tick, action) = match codes.last() {
        Some(&c) => ((c - 1) / a_max, (c - 1) % a_max + 1),
        None => (0, 0),
    };
    let p = masked_pmf(m, &symbols).unwrap();
    let mut out = Vec::new();
    for a in action + 1..=a_max {
        out.push((tick * a_max + a, p[a as usize - 1]));
    }
    for dt in 1..=u64::from(v.s_max()) {
        let mut h = symbols.clone();
        h.push(Symbol::Shift(dt as u32));
        let q = masked_pmf(m, &h).unwrap();
        for a in 1..=a_max {
            out.push((
                (tick + dt) * a_max + a,
                p[(a_max + dt - 1) as usize] * q[a as usize - 1],
            ));
        }
    }
    out
}

/// Law of the set of codes in `1..=HORIZON`, indexed by bitmask (bit `c - 1`).
fn exact_law(m: &BigramTable) -> Vec<f64> {
    let mut law = vec![0.0; 1 << HORIZON];
    fn walk(m: &BigramTable, codes: &mut Vec<u64>, p: f64, law: &mut [f64]) {
        let mut inside = 0.0;
        for (c, q) in next_code_law(m, codes) {
            if c <= HORIZON && q > 0.0 {
                inside += q;
                codes.push(c);
                walk(m, codes, p * q, law);
                codes.pop();
            }
        }
        let mask = codes.iter().fold(0usize, |acc, &c| acc | 1 << (c - 1));
        law[mask] += p * (1.0 - inside);
    }
    walk(m, &mut Vec::new(), 1.0, &mut law);
    law
}

fn check(codes: &[u64], flags: &[bool]) -> f64 {
    let m = model();
    let adapter = MusicSequenceModel::new(m.clone(), &[], HORIZON).unwrap();
    let z: Vec<f64> = codes
        .iter()
        .map(|&c| adapter.time_of_code(c).unwrap())
        .collect();
    let c = ConstraintSet::new(z, flags.to_vec()).unwrap();

    let mut exact = exact_law(&m);
    assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    for (mask, p) in exact.iter_mut().enumerate() {
        let times: Vec<f64> = (1..=HORIZON)
            .filter(|k| mask >> (k - 1) & 1 == 1)
            .map(|k| adapter.time_of_code(k).unwrap())
            .collect();
        if !c.is_satisfied_by(&times) {
            *p = 0.0;
        }
    }
    let total: f64 = exact.iter().sum();
    exact.iter_mut().for_each(|p| *p /= total);

    let streams = StreamFactory::new(5);
    let mut counts = vec![0u64; exact.len()];
    for r in 0..400 {
        let res = conditional_sample(&adapter, &c, &SmcConfig::new(500), &streams.run(r)).unwrap();
        assert!(res.survived);
        for x in &res.samples {
            let mask = x
                .as_slice()
                .iter()
                .fold(0usize, |acc, &t| acc | 1 << (adapter.code_of_time(t) - 1));
            counts[mask] += 1;
        }
    }
    total_variation(&exact, &counts)
}

#[test]
fn free_segments_match_enumeration() {
    let tv = check(&[3], &[true]);
    assert!(tv < 0.02, "tv {tv}");
}

#[test]
fn mixed_flags_match_enumeration() {
    let tv = check(&[2, 5, 6], &[false, true, true]);
    assert!(tv < 0.02, "tv {tv}");
}
