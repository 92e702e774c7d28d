use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{DiscreteStepModel, Symbol, Vocabulary};
use crate::error::{Error, Result};

const FORMAT: &str = "ppsmc-ngram";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
struct ContextCounts {
    total: u64,
    counts: HashMap<u32, u64>,
}

/// Order-`k` symbol model with additive smoothing. The context is the last
/// `k - 1` symbols, or fewer near the start of a stream.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    vocab: Vocabulary,
    order: usize,
    alpha: f64,
    contexts: HashMap<Vec<u32>, ContextCounts>,
}

/// (context symbol indices, [(next symbol index, count)])
type ContextEntry = (Vec<u32>, Vec<(u32, u64)>);

#[derive(Serialize, Deserialize)]
struct NGramFile {
    format: String,
    version: u32,
    vocabulary: Vocabulary,
    order: usize,
    alpha: f64,
    contexts: Vec<ContextEntry>,
}

impl NGramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    fn context<'a>(&self, history: &'a [Symbol]) -> impl Iterator<Item = u32> + 'a {
        let vocab = self.vocab;
        let start = history.len().saturating_sub(self.order - 1);
        history[start..]
            .iter()
            .map(move |s| vocab.symbol_index(*s) as u32)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut contexts: Vec<ContextEntry> = self
            .contexts
            .iter()
            .map(|(ctx, c)| {
                let counts: BTreeMap<u32, u64> = c.counts.iter().map(|(&k, &v)| (k, v)).collect();
                (ctx.clone(), counts.into_iter().collect())
            })
            .collect();
        contexts.sort();
        Ok(serde_json::to_string(&NGramFile {
            format: FORMAT.into(),
            version: VERSION,
            vocabulary: self.vocab,
            order: self.order,
            alpha: self.alpha,
            contexts,
        })?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NGramFile = serde_json::from_str(text)?;
        if file.format != FORMAT || file.version != VERSION {
            return Err(Error::Format(format!(
                "unsupported model file {} v{}",
                file.format, file.version
            )));
        }
        check_params(file.order, file.alpha)?;
        let size = file.vocabulary.size() as u32;
        let mut contexts = HashMap::new();
        for (ctx, entries) in file.contexts {
            if ctx.len() >= file.order
                || ctx
                    .iter()
                    .chain(entries.iter().map(|(k, _)| k))
                    .any(|&i| i >= size)
            {
                return Err(Error::Format("model context out of range".into()));
            }
            let counts: HashMap<u32, u64> = entries.into_iter().collect();
            let total = counts.values().sum();
            contexts.insert(ctx, ContextCounts { total, counts });
        }
        Ok(Self {
            vocab: file.vocabulary,
            order: file.order,
            alpha: file.alpha,
            contexts,
        })
    }
}

fn check_params(order: usize, alpha: f64) -> Result<()> {
    if order == 0 {
        return Err(Error::Corpus("n-gram order must be at least 1".into()));
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Corpus(format!(
            "smoothing must be positive, got {alpha}"
        )));
    }
    Ok(())
}

/// Counts order-`k` transitions over the corpus with additive smoothing `alpha`.
pub fn train_ngram(
    vocab: Vocabulary,
    corpus: &[Vec<Symbol>],
    order: usize,
    alpha: f64,
) -> Result<NGramModel> {
    check_params(order, alpha)?;
    if corpus.iter().all(|s| s.is_empty()) {
        return Err(Error::Corpus("empty corpus".into()));
    }
    let mut model = NGramModel {
        vocab,
        order,
        alpha,
        contexts: HashMap::new(),
    };
    for seq in corpus {
        for (i, &s) in seq.iter().enumerate() {
            vocab.check_symbol(s)?;
            let ctx: Vec<u32> = model.context(&seq[..i]).collect();
            let entry = model.contexts.entry(ctx).or_default();
            entry.total += 1;
            *entry
                .counts
                .entry(vocab.symbol_index(s) as u32)
                .or_default() += 1;
        }
    }
    Ok(model)
}

impl DiscreteStepModel for NGramModel {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn logits(&self, history: &[Symbol]) -> Result<Vec<f64>> {
        let size = self.vocab.size();
        let ctx: Vec<u32> = self.context(history).collect();
        let empty = ContextCounts::default();
        let c = self.contexts.get(&ctx).unwrap_or(&empty);
        let denom = (c.total as f64 + self.alpha * size as f64).ln();
        let mut out = vec![self.alpha.ln() - denom; size];
        for (&k, &n) in &c.counts {
            out[k as usize] = (n as f64 + self.alpha).ln() - denom;
        }
        Ok(out)
    }
}

/// First-order model given by an explicit logit table: row 0 is used at the
/// start of a stream and row `1 + i` after symbol index `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BigramTable {
    vocab: Vocabulary,
    rows: Vec<Vec<f64>>,
}

impl BigramTable {
    pub fn new(vocab: Vocabulary, rows: Vec<Vec<f64>>) -> Result<Self> {
        let size = vocab.size();
        if rows.len() != size + 1 || rows.iter().any(|r| r.len() != size) {
            return Err(Error::Model(format!(
                "bigram table must be {} rows of {size} logits",
                size + 1
            )));
        }
        Ok(Self { vocab, rows })
    }
}

impl DiscreteStepModel for BigramTable {
    fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    fn logits(&self, history: &[Symbol]) -> Result<Vec<f64>> {
        let row = history
            .last()
            .map_or(0, |s| self.vocab.symbol_index(*s) + 1);
        Ok(self.rows[row].clone())
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::music::{masked_pmf, sample_symbols, softmax};

    fn vocab() -> Vocabulary {
        Vocabulary::new(4, 1, 3).unwrap()
    }

    fn held_out_log_prob<M: DiscreteStepModel>(m: &M, data: &[Vec<Symbol>]) -> f64 {
        data.iter()
            .map(|seq| {
                (0..seq.len())
                    .map(|i| {
                        let p = masked_pmf(m, &seq[..i]).unwrap();
                        p[m.vocabulary().symbol_index(seq[i])].ln()
                    })
                    .sum::<f64>()
            })
            .sum()
    }

    #[test]
    fn unigram_counts() {
        let v = vocab();
        let seq = vec![
            Symbol::Action(1),
            Symbol::Action(2),
            Symbol::Shift(1),
            Symbol::Action(1),
        ];
        let m = train_ngram(v, &[seq], 1, 1e-12).unwrap();
        let p = softmax(&m.logits(&[]).unwrap()).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-9);
        assert!((p[1] - 0.25).abs() < 1e-9);
        assert!((p[4] - 0.25).abs() < 1e-9);
        assert!(p[2] < 1e-9);
    }

    #[test]
    fn heavy_smoothing_is_uniform_over_unmasked() {
        let v = vocab();
        let seq = vec![
            Symbol::Action(1),
            Symbol::Action(3),
            Symbol::Shift(2),
            Symbol::Action(2),
        ];
        let m = train_ngram(v, &[seq], 2, 1e9).unwrap();
        let p = masked_pmf(&m, &[Symbol::Action(2)]).unwrap();
        // actions 3, 4 and three shifts remain
        for &i in &[2usize, 3, 4, 5, 6] {
            assert!((p[i] - 0.2).abs() < 1e-6);
        }
        assert_eq!(p[0], 0.0);
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(train_ngram(vocab(), &[], 2, 1.0).is_err());
        assert!(train_ngram(vocab(), &[vec![]], 2, 1.0).is_err());
        assert!(train_ngram(vocab(), &[vec![Symbol::Action(1)]], 0, 1.0).is_err());
        assert!(train_ngram(vocab(), &[vec![Symbol::Action(1)]], 1, 0.0).is_err());
        assert!(train_ngram(vocab(), &[vec![Symbol::Shift(9)]], 1, 1.0).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let seq = vec![Symbol::Action(1), Symbol::Shift(2), Symbol::Action(4)];
        let m = train_ngram(vocab(), &[seq.clone(), seq], 3, 0.5).unwrap();
        let back = NGramModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        let bad = m
            .to_json()
            .unwrap()
            .replace("\"version\":1", "\"version\":9");
        assert!(NGramModel::from_json(&bad).is_err());
    }

    #[test]
    fn bigram_beats_unigram_on_bigram_data() {
        let v = vocab();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        let rows = (0..=v.size())
            .map(|_| (0..v.size()).map(|_| rng.random_range(-3.0..3.0)).collect())
            .collect();
        let source = BigramTable::new(v, rows).unwrap();
        let mut draw = |n| -> Vec<Vec<Symbol>> {
            (0..n)
                .map(|_| sample_symbols(&source, 40, &mut rng).unwrap())
                .collect()
        };
        let train = draw(300);
        let test = draw(50);
        let uni = train_ngram(v, &train, 1, 0.5).unwrap();
        let bi = train_ngram(v, &train, 2, 0.5).unwrap();
        assert!(held_out_log_prob(&bi, &test) > held_out_log_prob(&uni, &test));
    }
}
