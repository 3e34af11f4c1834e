//! CBOW word embeddings with negative sampling, and cosine nearest-neighbour
//! queries over the trained table.
//!
//! Training follows the classic word2vec recipe: per-position random window
//! shrink, averaged context vectors, noise words drawn from the unigram
//! distribution raised to 3/4, frequent-word subsampling and a learning rate
//! that decays linearly over all training positions. With `workers == 1` the
//! run is fully determined by the seed. With more workers, threads update the
//! shared matrices without locks and results vary between runs.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::atomic::{AtomicU32, AtomicU64, Ordering};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::textnorm::TokenizedNote;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub dim: usize,
    pub window: usize,
    pub min_count: u64,
    pub epochs: usize,
    pub negative_samples: usize,
    pub initial_lr: f64,
    pub subsample_threshold: f64,
    pub seed: u64,
    pub workers: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            dim: 200,
            window: 7,
            min_count: 5,
            epochs: 5,
            negative_samples: 5,
            initial_lr: 0.025,
            subsample_threshold: 1e-3,
            seed: 42,
            workers: 1,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(format!("embedding config: {m}")));
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if self.negative_samples == 0 {
            return bad("negative_samples must be >= 1");
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return bad("initial_lr must be > 0");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if self.min_count == 0 {
            return bad("min_count must be >= 1");
        }
        if self.workers == 0 {
            return bad("workers must be >= 1");
        }
        if self.subsample_threshold.is_nan() || self.subsample_threshold < 0.0 {
            return bad("subsample_threshold must be >= 0");
        }
        Ok(())
    }
}

/// Trained word vectors, one row per vocabulary token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    words: Vec<String>,
    index: HashMap<String, usize>,
    counts: Vec<u64>,
    dim: usize,
    vectors: Vec<f32>,
    config: EmbeddingConfig,
}

impl EmbeddingTable {
    /// Builds a table from explicit rows. All rows must have `config.dim`
    /// components and tokens must be unique.
    pub fn from_vectors(rows: Vec<(String, Vec<f32>)>, config: EmbeddingConfig) -> Result<Self> {
        let dim = config.dim;
        let mut words = Vec::with_capacity(rows.len());
        let mut index = HashMap::with_capacity(rows.len());
        let mut vectors = Vec::with_capacity(rows.len() * dim);
        for (word, v) in rows {
            if v.len() != dim {
                return Err(Error::InvalidArgument(format!(
                    "vector for {word:?} has {} components, expected {dim}",
                    v.len()
                )));
            }
            if index.insert(word.clone(), words.len()).is_some() {
                return Err(Error::InvalidArgument(format!("duplicate token {word:?}")));
            }
            words.push(word);
            vectors.extend(v);
        }
        let counts = vec![0; words.len()];
        Ok(EmbeddingTable {
            words,
            index,
            counts,
            dim,
            vectors,
            config,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn config(&self) -> &EmbeddingConfig {
        &self.config
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Training-corpus frequency of each token (zero for imported tables).
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn vector(&self, token: &str) -> Option<&[f32]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn matrix(&self) -> &[f32] {
        &self.vectors
    }

    /// Cosine similarity of two tokens' vectors; 0 if either vector is zero.
    pub fn similarity(&self, a: &str, b: &str) -> Result<f64> {
        let va = self.vector(a).ok_or_else(|| Error::OutOfVocabulary(a.into()))?;
        let vb = self.vector(b).ok_or_else(|| Error::OutOfVocabulary(b.into()))?;
        Ok(cosine(va, vb))
    }

    /// The `k` most similar tokens to `query`, excluding itself, by cosine
    /// descending with ties broken by token order.
    pub fn nearest(&self, query: &str, k: usize) -> Result<Vec<(String, f64)>> {
        if k == 0 {
            return Err(Error::InvalidArgument("k must be at least 1".into()));
        }
        let &q = self
            .index
            .get(query)
            .ok_or_else(|| Error::OutOfVocabulary(query.into()))?;
        let qv = self.row(q);
        let mut scored: Vec<(usize, f64)> = (0..self.len())
            .filter(|&i| i != q)
            .map(|i| (i, cosine(qv, self.row(i))))
            .collect();
        scored.sort_by(|a, b| {
            b.1.total_cmp(&a.1)
                .then_with(|| self.words[a.0].cmp(&self.words[b.0]))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(i, c)| (self.words[i].clone(), c))
            .collect())
    }

    /// TSV export: a `V dim` header, then `token<TAB>v1<TAB>...` per row.
    pub fn to_tsv(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dim);
        for (i, w) in self.words.iter().enumerate() {
            out.push_str(w);
            for x in self.row(i) {
                out.push('\t');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }

    pub fn write_tsv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_tsv()).map_err(|e| Error::io(path, e))
    }

    pub fn from_tsv(body: &str, origin: &Path) -> Result<Self> {
        let bad = |line: usize, message: String| Error::MalformedRecord {
            path: origin.to_owned(),
            line,
            message,
        };
        let mut lines = body.lines();
        let header = lines.next().ok_or_else(|| bad(1, "missing `V dim` header".into()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let (v, dim) = match parts.as_slice() {
            [v, d] => (
                v.parse::<usize>().map_err(|_| bad(1, format!("bad vocabulary size {v:?}")))?,
                d.parse::<usize>().map_err(|_| bad(1, format!("bad dimension {d:?}")))?,
            ),
            _ => return Err(bad(1, "expected header `V dim`".into())),
        };
        let mut rows = Vec::with_capacity(v);
        for (i, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let word = cols.next().unwrap_or_default().to_owned();
            let vec: Vec<f32> = cols
                .map(|c| c.parse::<f32>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| bad(i + 2, e.to_string()))?;
            if vec.len() != dim {
                return Err(bad(i + 2, format!("expected {dim} components, found {}", vec.len())));
            }
            rows.push((word, vec));
        }
        if rows.len() != v {
            return Err(bad(1, format!("header declares {v} rows, found {}", rows.len())));
        }
        EmbeddingTable::from_vectors(rows, EmbeddingConfig { dim, ..EmbeddingConfig::default() })
    }

    pub fn read_tsv(path: &Path) -> Result<Self> {
        let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&body, path)
    }
}

pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let (mut dot, mut na, mut nb) = (0.0f64, 0.0f64, 0.0f64);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64, y as f64);
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Trains a table and returns it without the loss trace.
pub fn train_cbow(corpus: &[TokenizedNote], config: &EmbeddingConfig) -> Result<EmbeddingTable> {
    train_cbow_with_loss(corpus, config).map(|(t, _)| t)
}

/// Trains a table and reports the mean negative-sampling loss per centre
/// word for each epoch.
pub fn train_cbow_with_loss(
    corpus: &[TokenizedNote],
    config: &EmbeddingConfig,
) -> Result<(EmbeddingTable, Vec<f64>)> {
    config.validate()?;

    let mut freq: HashMap<&str, u64> = HashMap::new();
    for note in corpus {
        for norm in note.norms() {
            *freq.entry(norm).or_default() += 1;
        }
    }
    let mut vocab: Vec<(&str, u64)> = freq
        .into_iter()
        .filter(|&(_, c)| c >= config.min_count)
        .collect();
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary(config.min_count));
    }
    vocab.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let index: HashMap<&str, usize> = vocab.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();

    let sentences: Vec<Vec<usize>> = corpus
        .iter()
        .flat_map(|n| &n.sentences)
        .map(|s| s.tokens.iter().filter_map(|t| index.get(t.norm.as_str()).copied()).collect())
        .filter(|s: &Vec<usize>| !s.is_empty())
        .collect();

    let counts: Vec<u64> = vocab.iter().map(|&(_, c)| c).collect();
    let total: u64 = counts.iter().sum();
    let keep_prob: Vec<f64> = counts
        .iter()
        .map(|&c| {
            let f = c as f64 / total as f64;
            let t = config.subsample_threshold;
            if t > 0.0 && f > t {
                (t / f).sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let noise = WeightedIndex::new(counts.iter().map(|&c| (c as f64).powf(0.75)))
        .expect("counts are positive");

    let v = vocab.len();
    let dim = config.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut input: Vec<f32> = (0..v * dim)
        .map(|_| (rng.random::<f32>() - 0.5) / dim as f32)
        .collect();
    let mut output = vec![0.0f32; v * dim];

    let plan = Plan {
        sentences: &sentences,
        keep_prob: &keep_prob,
        noise: &noise,
        config,
        dim,
        total_positions: (total * config.epochs as u64) as f64 + 1.0,
    };

    let mut losses = Vec::with_capacity(config.epochs);
    if config.workers == 1 {
        let mut processed = 0u64;
        for _ in 0..config.epochs {
            let mut state = EpochState::default();
            let mut inp = Dense { data: &mut input, dim };
            let mut out = Dense { data: &mut output, dim };
            for s in &sentences {
                plan.sentence(s, &mut inp, &mut out, &mut rng, &mut state, &mut || {
                    processed += 1;
                    processed
                });
            }
            losses.push(state.mean());
        }
    } else {
        let shared_in: Vec<AtomicU32> = input.iter().map(|x| AtomicU32::new(x.to_bits())).collect();
        let shared_out: Vec<AtomicU32> = output.iter().map(|x| AtomicU32::new(x.to_bits())).collect();
        let processed = AtomicU64::new(0);
        for epoch in 0..config.epochs {
            let states: Vec<EpochState> = std::thread::scope(|scope| {
                let handles: Vec<_> = (0..config.workers)
                    .map(|w| {
                        let (plan, shared_in, shared_out, processed) =
                            (&plan, &shared_in, &shared_out, &processed);
                        scope.spawn(move || {
                            let mut rng = ChaCha8Rng::seed_from_u64(
                                config.seed ^ ((epoch as u64) << 32) ^ (w as u64 + 1),
                            );
                            let mut inp = Shared { data: shared_in, dim };
                            let mut out = Shared { data: shared_out, dim };
                            let mut state = EpochState::default();
                            for s in plan.sentences.iter().skip(w).step_by(config.workers) {
                                plan.sentence(s, &mut inp, &mut out, &mut rng, &mut state, &mut || {
                                    processed.fetch_add(1, Ordering::Relaxed) + 1
                                });
                            }
                            state
                        })
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
            });
            let merged = states.into_iter().fold(EpochState::default(), |a, b| EpochState {
                loss: a.loss + b.loss,
                examples: a.examples + b.examples,
            });
            losses.push(merged.mean());
        }
        input = shared_in.iter().map(|a| f32::from_bits(a.load(Ordering::Relaxed))).collect();
    }

    let words: Vec<String> = vocab.iter().map(|(w, _)| (*w).to_owned()).collect();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    Ok((
        EmbeddingTable {
            words,
            index,
            counts,
            dim,
            vectors: input,
            config: config.clone(),
        },
        losses,
    ))
}

trait Rows {
    fn load(&self, row: usize, out: &mut [f32]);
    fn add(&mut self, row: usize, v: &[f32], scale: f32);
}

struct Dense<'a> {
    data: &'a mut [f32],
    dim: usize,
}

impl Rows for Dense<'_> {
    fn load(&self, row: usize, out: &mut [f32]) {
        out.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn add(&mut self, row: usize, v: &[f32], scale: f32) {
        for (x, &d) in self.data[row * self.dim..(row + 1) * self.dim].iter_mut().zip(v) {
            *x += scale * d;
        }
    }
}

/// Lock-free shared rows; concurrent updates may overwrite each other.
struct Shared<'a> {
    data: &'a [AtomicU32],
    dim: usize,
}

impl Rows for Shared<'_> {
    fn load(&self, row: usize, out: &mut [f32]) {
        for (o, a) in out.iter_mut().zip(&self.data[row * self.dim..(row + 1) * self.dim]) {
            *o = f32::from_bits(a.load(Ordering::Relaxed));
        }
    }

    fn add(&mut self, row: usize, v: &[f32], scale: f32) {
        for (a, &d) in self.data[row * self.dim..(row + 1) * self.dim].iter().zip(v) {
            let x = f32::from_bits(a.load(Ordering::Relaxed)) + scale * d;
            a.store(x.to_bits(), Ordering::Relaxed);
        }
    }
}

#[derive(Default)]
struct EpochState {
    loss: f64,
    examples: u64,
}

impl EpochState {
    fn mean(&self) -> f64 {
        if self.examples == 0 {
            0.0
        } else {
            self.loss / self.examples as f64
        }
    }
}

struct Plan<'a> {
    sentences: &'a [Vec<usize>],
    keep_prob: &'a [f64],
    noise: &'a WeightedIndex<f64>,
    config: &'a EmbeddingConfig,
    dim: usize,
    total_positions: f64,
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl Plan<'_> {
    fn sentence<R: Rows>(
        &self,
        sentence: &[usize],
        input: &mut R,
        output: &mut R,
        rng: &mut ChaCha8Rng,
        state: &mut EpochState,
        tick: &mut dyn FnMut() -> u64,
    ) {
        let mut kept = Vec::with_capacity(sentence.len());
        let mut ticks = Vec::with_capacity(sentence.len());
        for &w in sentence {
            let t = tick();
            let p = self.keep_prob[w];
            if p >= 1.0 || rng.random::<f64>() < p {
                kept.push(w);
                ticks.push(t);
            }
        }

        let dim = self.dim;
        let mut h = vec![0.0f32; dim];
        let mut grad = vec![0.0f32; dim];
        let mut row = vec![0.0f32; dim];
        let mut context = Vec::with_capacity(2 * self.config.window);
        let floor = self.config.initial_lr * 1e-4;

        for (pos, &center) in kept.iter().enumerate() {
            let progress = ticks[pos] as f64 / self.total_positions;
            let lr = (self.config.initial_lr * (1.0 - progress)).max(floor) as f32;

            let b = rng.random_range(1..=self.config.window);
            context.clear();
            let lo = pos.saturating_sub(b);
            let hi = (pos + b).min(kept.len() - 1);
            context.extend((lo..=hi).filter(|&j| j != pos).map(|j| kept[j]));
            if context.is_empty() {
                continue;
            }

            h.iter_mut().for_each(|x| *x = 0.0);
            for &c in &context {
                input.load(c, &mut row);
                for (x, &r) in h.iter_mut().zip(&row) {
                    *x += r;
                }
            }
            let inv = 1.0 / context.len() as f32;
            h.iter_mut().for_each(|x| *x *= inv);
            grad.iter_mut().for_each(|x| *x = 0.0);

            let mut loss = 0.0f64;
            for k in 0..=self.config.negative_samples {
                let (target, label) = if k == 0 {
                    (center, 1.0f32)
                } else {
                    let t = self.noise.sample(rng);
                    if t == center {
                        continue;
                    }
                    (t, 0.0f32)
                };
                output.load(target, &mut row);
                let f: f32 = h.iter().zip(&row).map(|(a, b)| a * b).sum();
                let sig = 1.0 / (1.0 + (-f).exp());
                loss += if label > 0.5 {
                    softplus(-(f as f64))
                } else {
                    softplus(f as f64)
                };
                let g = (label - sig) * lr;
                for (e, &r) in grad.iter_mut().zip(&row) {
                    *e += g * r;
                }
                output.add(target, &h, g);
            }
            for &c in &context {
                input.add(c, &grad, 1.0);
            }
            state.loss += loss;
            state.examples += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textnorm::Tokenizer;

    fn corpus(lines: &[String]) -> Vec<TokenizedNote> {
        let tk = Tokenizer::default();
        lines
            .iter()
            .enumerate()
            .map(|(i, l)| tk.tokenize_text(&format!("n{i}"), l))
            .collect()
    }

    fn small_config() -> EmbeddingConfig {
        EmbeddingConfig {
            dim: 16,
            window: 3,
            min_count: 1,
            epochs: 5,
            ..EmbeddingConfig::default()
        }
    }

    #[test]
    fn degenerate_corpus_is_finite() {
        let lines = vec!["started on cefazolin for cellulitis".to_string(); 30];
        let cfg = EmbeddingConfig { dim: 2, ..small_config() };
        let t = train_cbow(&corpus(&lines), &cfg).unwrap();
        assert!(t.matrix().iter().all(|x| x.is_finite()));
        for i in 0..t.len() {
            assert!(t.row(i).iter().any(|&x| x != 0.0));
        }
    }

    #[test]
    fn deterministic_single_worker() {
        let lines: Vec<String> = (0..50)
            .map(|i| format!("pt given vanco dose {i} for pna and wbc trending down"))
            .collect();
        let c = corpus(&lines);
        let a = train_cbow(&c, &small_config()).unwrap();
        let b = train_cbow(&c, &small_config()).unwrap();
        assert_eq!(a.matrix(), b.matrix());
        let other = train_cbow(&c, &EmbeddingConfig { seed: 9, ..small_config() }).unwrap();
        assert_ne!(a.matrix(), other.matrix());
    }

    #[test]
    fn multi_worker_runs() {
        let lines: Vec<String> = (0..80)
            .map(|i| format!("pt given vanco dose {} for pna and wbc trending down", i % 7))
            .collect();
        let cfg = EmbeddingConfig { workers: 3, ..small_config() };
        let (t, losses) = train_cbow_with_loss(&corpus(&lines), &cfg).unwrap();
        assert_eq!(losses.len(), cfg.epochs);
        assert!(t.matrix().iter().all(|x| x.is_finite()));
    }

    #[test]
    fn min_count_filters_and_empty_errors() {
        let lines = vec!["alpha beta".to_string(), "alpha gamma".to_string()];
        let cfg = EmbeddingConfig { min_count: 2, ..small_config() };
        let t = train_cbow(&corpus(&lines), &cfg).unwrap();
        assert_eq!(t.words(), ["alpha"]);
        let cfg = EmbeddingConfig { min_count: 3, ..small_config() };
        assert!(matches!(train_cbow(&corpus(&lines), &cfg), Err(Error::EmptyVocabulary(3))));
    }

    #[test]
    fn config_validation() {
        for cfg in [
            EmbeddingConfig { dim: 0, ..EmbeddingConfig::default() },
            EmbeddingConfig { window: 0, ..EmbeddingConfig::default() },
            EmbeddingConfig { negative_samples: 0, ..EmbeddingConfig::default() },
            EmbeddingConfig { initial_lr: 0.0, ..EmbeddingConfig::default() },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    fn table(rows: &[(&str, &[f32])]) -> EmbeddingTable {
        let dim = rows[0].1.len();
        EmbeddingTable::from_vectors(
            rows.iter().map(|(w, v)| (w.to_string(), v.to_vec())).collect(),
            EmbeddingConfig { dim, ..EmbeddingConfig::default() },
        )
        .unwrap()
    }

    #[test]
    fn nearest_of_two() {
        let t = table(&[("a", &[1.0, 0.0]), ("b", &[0.0, 1.0])]);
        assert_eq!(t.nearest("a", 1).unwrap(), vec![("b".to_string(), 0.0)]);
        assert!((t.similarity("a", "a").unwrap() - 1.0).abs() < 1e-9);
        assert!(matches!(t.nearest("zzz", 1), Err(Error::OutOfVocabulary(w)) if w == "zzz"));
        assert!(t.nearest("a", 0).is_err());
    }

    #[test]
    fn ties_break_lexicographically() {
        let t = table(&[("q", &[1.0, 0.0]), ("zeta", &[2.0, 0.0]), ("alpha", &[3.0, 0.0])]);
        let names: Vec<_> = t.nearest("q", 2).unwrap().into_iter().map(|p| p.0).collect();
        assert_eq!(names, ["alpha", "zeta"]);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let rows: &[(&str, &[f32])] = &[
            ("a", &[1.0, 0.2, -0.3]),
            ("b", &[0.9, 0.1, 0.0]),
            ("c", &[-1.0, 0.5, 0.2]),
            ("d", &[0.3, 0.3, 0.3]),
            ("e", &[0.0, -1.0, 0.4]),
        ];
        let t = table(rows);
        for (q, qv) in rows {
            let mut brute: Vec<(String, f64)> = rows
                .iter()
                .filter(|(w, _)| w != q)
                .map(|(w, v)| {
                    let dot: f64 = qv.iter().zip(*v).map(|(x, y)| (*x as f64) * (*y as f64)).sum();
                    let n1: f64 = qv.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
                    let n2: f64 = v.iter().map(|x| (*x as f64).powi(2)).sum::<f64>().sqrt();
                    (w.to_string(), dot / (n1 * n2))
                })
                .collect();
            brute.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap());
            let got = t.nearest(q, 4).unwrap();
            for (g, b) in got.iter().zip(&brute) {
                assert_eq!(g.0, b.0);
                assert!((g.1 - b.1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn tsv_round_trip() {
        let t = table(&[("a", &[1.5, -0.25]), ("b", &[1e-7, 3.0e5])]);
        let back = EmbeddingTable::from_tsv(&t.to_tsv(), Path::new("x")).unwrap();
        assert_eq!(back.words(), t.words());
        for (x, y) in back.matrix().iter().zip(t.matrix()) {
            assert!((x - y).abs() <= 1e-6);
        }
        assert!(EmbeddingTable::from_tsv("2 2\na\t1\t2\n", Path::new("x")).is_err());
        assert!(EmbeddingTable::from_tsv("1 2\na\t1\n", Path::new("x")).is_err());
    }

    proptest::proptest! {
        #[test]
        fn cosine_symmetric_and_bounded(
            a in proptest::collection::vec(-10f32..10.0, 4),
            b in proptest::collection::vec(-10f32..10.0, 4),
        ) {
            let ab = cosine(&a, &b);
            proptest::prop_assert!((ab - cosine(&b, &a)).abs() < 1e-9);
            proptest::prop_assert!((-1.0..=1.0).contains(&ab));
        }

        #[test]
        fn positive_scaling_keeps_ranking(
            rows in proptest::collection::vec(proptest::collection::vec(-1f32..1.0, 3), 4..8),
            scale in 0.1f32..10.0,
            which in 0usize..4,
        ) {
            let names: Vec<String> = (0..rows.len()).map(|i| format!("w{i}")).collect();
            let cfg = EmbeddingConfig { dim: 3, ..EmbeddingConfig::default() };
            let t = EmbeddingTable::from_vectors(names.iter().cloned().zip(rows.clone()).collect(), cfg.clone()).unwrap();
            let scaled: Vec<Vec<f32>> = rows.iter().enumerate()
                .map(|(i, r)| if i == which { r.iter().map(|x| x * scale).collect() } else { r.clone() })
                .collect();
            let s = EmbeddingTable::from_vectors(names.iter().cloned().zip(scaled).collect(), cfg).unwrap();
            for q in &names {
                let a: Vec<f64> = t.nearest(q, names.len() - 1).unwrap().into_iter().map(|p| p.1).collect();
                let b: Vec<f64> = s.nearest(q, names.len() - 1).unwrap().into_iter().map(|p| p.1).collect();
                for (x, y) in a.iter().zip(&b) {
                    proptest::prop_assert!((x - y).abs() < 1e-5);
                }
            }
        }
    }
}
