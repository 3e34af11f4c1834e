//! Bag-of-words vocabulary with document-frequency pruning, and tf-idf
//! vectors.
//!
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, weights are `tf * idf` with raw
//! counts as tf, and every non-empty vector is L2-normalized.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::textnorm::TokenizedNote;
use crate::{Error, Result};

pub const DEFAULT_MIN_DF: u32 = 6;
pub const DEFAULT_MAX_DF_RATIO: f64 = 0.6;

#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
    df: Vec<u32>,
    idf: Vec<f64>,
    corpus_size: usize,
}

pub fn idf(corpus_size: usize, df: u32) -> f64 {
    ((1.0 + corpus_size as f64) / (1.0 + df as f64)).ln() + 1.0
}

impl Vocabulary {
    /// Rebuilds a vocabulary from persisted `(token, df)` rows, which must be
    /// in lexicographic order.
    pub fn from_parts(rows: Vec<(String, u32)>, corpus_size: usize) -> Result<Self> {
        if rows.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidArgument(
                "vocabulary rows must be strictly sorted".into(),
            ));
        }
        let mut tokens = Vec::with_capacity(rows.len());
        let mut df = Vec::with_capacity(rows.len());
        for (t, d) in rows {
            tokens.push(t);
            df.push(d);
        }
        let index = tokens.iter().enumerate().map(|(i, t)| (t.clone(), i as u32)).collect();
        let idf = df.iter().map(|&d| idf(corpus_size, d)).collect();
        Ok(Vocabulary {
            tokens,
            index,
            df,
            idf,
            corpus_size,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn get(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn df(&self, index: u32) -> u32 {
        self.df[index as usize]
    }

    pub fn idf(&self, index: u32) -> f64 {
        self.idf[index as usize]
    }

    /// Hex SHA-256 over the corpus size and every `(token, df)` row.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.corpus_size.to_le_bytes());
        for (t, d) in self.tokens.iter().zip(&self.df) {
            h.update(t.as_bytes());
            h.update([0]);
            h.update(d.to_le_bytes());
        }
        hex(&h.finalize())
    }

    /// `token, index, df, idf` rows with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("token\tindex\tdf\tidf\n");
        for (i, t) in self.tokens.iter().enumerate() {
            let _ = writeln!(out, "{t}\t{i}\t{}\t{}", self.df[i], self.idf[i]);
        }
        out
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Counts document frequencies over `corpus` and keeps tokens with
/// `min_df <= df <= max_df_ratio * N`. Indices follow lexicographic order.
pub fn build_vocabulary(corpus: &[TokenizedNote], min_df: u32, max_df_ratio: f64) -> Result<Vocabulary> {
    if corpus.is_empty() {
        return Err(Error::InvalidArgument("cannot build a vocabulary from an empty corpus".into()));
    }
    if !(max_df_ratio > 0.0 && max_df_ratio <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "max_df_ratio must lie in (0, 1], got {max_df_ratio}"
        )));
    }
    let n = corpus.len();
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    for note in corpus {
        let distinct: HashSet<&str> = note.norms().collect();
        for t in distinct {
            *df.entry(t).or_default() += 1;
        }
    }
    // df is an integer, so the tolerance only absorbs rounding in ratio * N
    let ceiling = max_df_ratio * n as f64 + 1e-9;
    let rows: Vec<(String, u32)> = df
        .into_iter()
        .filter(|&(_, d)| d >= min_df && d as f64 <= ceiling)
        .map(|(t, d)| (t.to_owned(), d))
        .collect();
    if rows.is_empty() {
        return Err(Error::AllTokensPruned { min_df, max_df_ratio });
    }
    Vocabulary::from_parts(rows, n)
}

/// Sparse vector with strictly increasing indices and non-zero weights.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    /// Sorts by index and merges duplicates by summation; zeros are dropped.
    pub fn from_pairs(mut pairs: Vec<(u32, f64)>) -> Self {
        pairs.sort_by_key(|p| p.0);
        let mut entries: Vec<(u32, f64)> = Vec::with_capacity(pairs.len());
        for (i, w) in pairs {
            match entries.last_mut() {
                Some(last) if last.0 == i => last.1 += w,
                _ => entries.push((i, w)),
            }
        }
        entries.retain(|e| e.1 != 0.0);
        SparseVector { entries }
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> SparseVector {
        SparseVector::from_pairs(self.entries.iter().map(|&(i, w)| (i, w * factor)).collect())
    }
}

/// tf-idf vector of `note` over `vocab`, L2-normalized. Out-of-vocabulary
/// tokens are ignored.
pub fn vectorize(note: &TokenizedNote, vocab: &Vocabulary) -> SparseVector {
    let mut tf: BTreeMap<u32, u32> = BTreeMap::new();
    for norm in note.norms() {
        if let Some(i) = vocab.get(norm) {
            *tf.entry(i).or_default() += 1;
        }
    }
    let weighted: Vec<(u32, f64)> = tf
        .into_iter()
        .map(|(i, c)| (i, c as f64 * vocab.idf(i)))
        .collect();
    let norm = weighted.iter().map(|e| e.1 * e.1).sum::<f64>().sqrt();
    if norm == 0.0 {
        return SparseVector::default();
    }
    SparseVector {
        entries: weighted.into_iter().map(|(i, w)| (i, w / norm)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textnorm::Tokenizer;

    fn notes(texts: &[&str]) -> Vec<TokenizedNote> {
        let tk = Tokenizer::default();
        texts
            .iter()
            .enumerate()
            .map(|(i, t)| tk.tokenize_text(&format!("n{i}"), t))
            .collect()
    }

    #[test]
    fn ubiquitous_token_pruned() {
        let texts: Vec<String> = (0..100).map(|i| format!("pt note{}", i % 2)).collect();
        let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
        let v = build_vocabulary(&notes(&refs), 1, 0.6).unwrap();
        assert!(v.get("pt").is_none());
        assert!(v.get("note0").is_some());
    }

    #[test]
    fn min_df_boundary() {
        for (df, kept) in [(5, false), (6, true)] {
            let texts: Vec<String> = (0..1000)
                .map(|i| if i < df { "rare common".to_string() } else { format!("common other{}", i % 3) })
                .collect();
            let refs: Vec<&str> = texts.iter().map(String::as_str).collect();
            let v = build_vocabulary(&notes(&refs), 6, 1.0).unwrap();
            assert_eq!(v.get("rare").is_some(), kept, "df={df}");
        }
    }

    #[test]
    fn max_df_boundary_inclusive() {
        // 6 of 10 notes is exactly 60%: kept; 7 of 10 is over: pruned
        let mut texts = vec!["six seven"; 6];
        texts.extend(["seven filler", "filler", "filler", "filler"]);
        let v = build_vocabulary(&notes(&texts), 1, 0.6).unwrap();
        assert!(v.get("six").is_some());
        assert!(v.get("seven").is_none());
    }

    #[test]
    fn everything_pruned_is_error() {
        let err = build_vocabulary(&notes(&["a", "a"]), 6, 0.6).unwrap_err();
        assert!(matches!(err, Error::AllTokensPruned { min_df: 6, .. }));
        assert!(err.to_string().contains("0.6"));
    }

    #[test]
    fn indices_are_lexicographic() {
        let v = build_vocabulary(&notes(&["b a c", "c d", "e"]), 1, 1.0).unwrap();
        assert_eq!(v.tokens(), ["a", "b", "c", "d", "e"]);
        assert_eq!(v.get("c"), Some(2));
        assert_eq!(v.df(2), 2);
    }

    #[test]
    fn hand_computed_weights() {
        // N = 4, vocabulary {a, b, c, d, e}
        let corpus = notes(&["a b c d e", "a b", "a c", "d e"]);
        let v = build_vocabulary(&corpus, 1, 1.0).unwrap();
        assert_eq!(v.len(), 5);
        let note = notes(&["a a b zzz"]).remove(0);
        let x = vectorize(&note, &v);
        let ia = (5.0f64 / 4.0).ln() + 1.0; // df(a) = 3
        let ib = (5.0f64 / 3.0).ln() + 1.0; // df(b) = 2
        let (wa, wb) = (2.0 * ia, ib);
        let norm = (wa * wa + wb * wb).sqrt();
        assert_eq!(x.entries().len(), 2);
        assert!((x.entries()[0].1 - wa / norm).abs() < 1e-12);
        assert!((x.entries()[1].1 - wb / norm).abs() < 1e-12);
    }

    #[test]
    fn degenerate_vectors() {
        let v = build_vocabulary(&notes(&["a b", "b c"]), 1, 1.0).unwrap();
        assert!(vectorize(&notes(&["zzz yyy"])[0], &v).is_empty());
        let one = vectorize(&notes(&["c c c"])[0], &v);
        assert_eq!(one.entries(), &[(2, 1.0)]);
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = build_vocabulary(&notes(&["a b", "b c"]), 1, 1.0).unwrap();
        let b = build_vocabulary(&notes(&["a b", "b d"]), 1, 1.0).unwrap();
        assert_eq!(a.fingerprint(), a.clone().fingerprint());
        assert_ne!(a.fingerprint(), b.fingerprint());
        assert_eq!(a.fingerprint().len(), 64);
    }

    proptest::proptest! {
        #[test]
        fn permutation_invariant_and_unit_norm(
            words in proptest::collection::vec(proptest::sample::select(vec!["a", "b", "c", "d", "x"]), 1..20),
            seed in 0u64..100,
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let v = build_vocabulary(&notes(&["a b c", "b c d", "a d", "c"]), 1, 1.0).unwrap();
            let mut shuffled = words.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let x = vectorize(&notes(&[&words.join(" ")])[0], &v);
            let y = vectorize(&notes(&[&shuffled.join(" ")])[0], &v);
            proptest::prop_assert_eq!(&x, &y);
            if !x.is_empty() {
                proptest::prop_assert!((x.norm() - 1.0).abs() < 1e-9);
            }
            proptest::prop_assert!(x.entries().windows(2).all(|w| w[0].0 < w[1].0));
            proptest::prop_assert!(x.entries().iter().all(|e| (e.0 as usize) < v.len() && e.1.is_finite() && e.1 != 0.0));
        }
    }
}
