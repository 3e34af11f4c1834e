//! Slow, literal reference implementations for the notewatch test suites.
//!
//! Nothing here shares code with `notewatch-core`: inputs are plain vectors
//! and strings, and each oracle restates its rule in the most direct form.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};

/// One token of a symbolic sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Symbol {
    Abx,
    PreNeg,
    PostNeg,
    PreSpec,
    Clause,
    Filler,
}

impl Symbol {
    pub const ALL: [Symbol; 6] = [
        Symbol::Abx,
        Symbol::PreNeg,
        Symbol::PostNeg,
        Symbol::PreSpec,
        Symbol::Clause,
        Symbol::Filler,
    ];

    fn is_trigger(self) -> bool {
        matches!(self, Symbol::PreNeg | Symbol::PostNeg | Symbol::PreSpec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Affirmed,
    Negated,
    Speculated,
}

/// Does the trigger at `t` reach the token at `p`? Nothing between them may
/// be a clause marker or a trigger, and `p` must be within `window` tokens.
fn reaches(symbols: &[Symbol], t: usize, p: usize, window: usize) -> bool {
    let forward = match symbols[t] {
        Symbol::PreNeg | Symbol::PreSpec => true,
        Symbol::PostNeg => false,
        _ => return false,
    };
    if forward != (p > t) || t.abs_diff(p) > window {
        return false;
    }
    let (lo, hi) = if t < p { (t + 1, p) } else { (p + 1, t) };
    (lo..hi).all(|i| symbols[i] != Symbol::Clause && !symbols[i].is_trigger())
}

/// Status of every `Abx` symbol, left to right.
pub fn scope_oracle(symbols: &[Symbol], window: usize) -> Vec<Status> {
    let mut out = Vec::new();
    for p in 0..symbols.len() {
        if symbols[p] != Symbol::Abx {
            continue;
        }
        let governing: Vec<Symbol> = (0..symbols.len())
            .filter(|&t| reaches(symbols, t, p, window))
            .map(|t| symbols[t])
            .collect();
        let status = if governing.iter().any(|s| matches!(s, Symbol::PreNeg | Symbol::PostNeg)) {
            Status::Negated
        } else if governing.contains(&Symbol::PreSpec) {
            Status::Speculated
        } else {
            Status::Affirmed
        };
        out.push(status);
    }
    out
}

/// Result of the reference SVM solve. `weights` ends with the bias.
#[derive(Debug, Clone)]
pub struct SvmSolution {
    pub weights: Vec<f64>,
    pub alphas: Vec<f64>,
    pub primal: f64,
    pub dual: f64,
}

impl SvmSolution {
    pub fn gap(&self) -> f64 {
        self.primal - self.dual
    }
}

/// `1/2 |w|^2 + C * sum_i c_i * hinge_i` with every row augmented by a 1.
pub fn svm_primal(weights: &[f64], x: &[Vec<f64>], y: &[f64], cost: f64, positive_weight: f64) -> f64 {
    let reg: f64 = weights.iter().map(|w| w * w).sum::<f64>() / 2.0;
    let mut loss = 0.0;
    for (row, &yi) in x.iter().zip(y) {
        let mut score = weights[row.len()];
        for (a, b) in row.iter().zip(weights) {
            score += a * b;
        }
        let c = if yi > 0.0 { positive_weight } else { 1.0 };
        loss += c * (1.0 - yi * score).max(0.0);
    }
    reg + cost * loss
}

/// Solves the class-weighted L1-loss SVM on dense toy data: accelerated
/// projected gradient on the box-constrained dual, then an exact solve on
/// the free variables. The returned primal/dual pair bounds the error.
pub fn svm_oracle(x: &[Vec<f64>], y: &[f64], cost: f64, positive_weight: f64) -> SvmSolution {
    let n = x.len();
    let d = x.first().map_or(0, Vec::len);
    let aug = DMatrix::from_fn(n, d + 1, |i, j| if j < d { x[i][j] } else { 1.0 });
    let z = DMatrix::from_fn(n, d + 1, |i, j| aug[(i, j)] * y[i]);
    let q = &z * z.transpose();
    let upper = DVector::from_fn(n, |i, _| cost * if y[i] > 0.0 { positive_weight } else { 1.0 });
    let clamp = |v: &DVector<f64>| DVector::from_fn(n, |i, _| v[i].clamp(0.0, upper[i]));

    let lipschitz = q.clone().symmetric_eigenvalues().max().max(1e-12);
    let dual = |a: &DVector<f64>| a.sum() - 0.5 * (a.transpose() * &q * a)[(0, 0)];
    let weights_of = |a: &DVector<f64>| z.transpose() * a;
    let primal = |a: &DVector<f64>| {
        let w = weights_of(a);
        svm_primal(w.as_slice(), x, y, cost, positive_weight)
    };

    let mut alpha = DVector::zeros(n);
    let mut momentum = alpha.clone();
    let mut t = 1.0f64;
    for iter in 0..200_000 {
        let grad = &q * &momentum - DVector::from_element(n, 1.0);
        let next = clamp(&(&momentum - grad / lipschitz));
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        momentum = &next + (&next - &alpha) * ((t - 1.0) / t_next);
        alpha = next;
        t = t_next;
        if iter % 500 == 499 && primal(&alpha) - dual(&alpha) < 1e-12 {
            break;
        }
    }

    // Fix bounded coordinates, solve the stationarity system on the rest.
    let eps = 1e-9;
    let free: Vec<usize> = (0..n).filter(|&i| alpha[i] > eps && alpha[i] < upper[i] - eps).collect();
    if !free.is_empty() {
        let mut polished = alpha.clone();
        for i in 0..n {
            if !free.contains(&i) {
                polished[i] = if alpha[i] <= eps { 0.0 } else { upper[i] };
            }
        }
        let qff = DMatrix::from_fn(free.len(), free.len(), |a, b| q[(free[a], free[b])]);
        let rhs = DVector::from_fn(free.len(), |a, _| {
            let i = free[a];
            1.0 - (0..n)
                .filter(|j| !free.contains(j))
                .map(|j| q[(i, j)] * polished[j])
                .sum::<f64>()
        });
        if let Ok(sol) = qff.svd(true, true).solve(&rhs, 1e-12) {
            for (a, &i) in free.iter().enumerate() {
                polished[i] = sol[a];
            }
            let polished = clamp(&polished);
            if primal(&polished) - dual(&polished) < primal(&alpha) - dual(&alpha) {
                alpha = polished;
            }
        }
    }

    let w = weights_of(&alpha);
    SvmSolution {
        primal: primal(&alpha),
        dual: dual(&alpha),
        weights: w.as_slice().to_vec(),
        alphas: alpha.as_slice().to_vec(),
    }
}

/// Per-document tf-idf weights computed by recounting from scratch, plus the
/// kept vocabulary in sorted order.
pub fn tfidf_recount(
    docs: &[Vec<String>],
    min_df: u32,
    max_df_ratio: f64,
) -> (Vec<String>, Vec<BTreeMap<String, f64>>) {
    let n = docs.len();
    let all: BTreeSet<&String> = docs.iter().flatten().collect();
    let mut kept = Vec::new();
    for token in all {
        let df = docs.iter().filter(|d| d.contains(token)).count();
        let share = df as f64 / n as f64;
        if df as u32 >= min_df && share <= max_df_ratio + 1e-12 {
            kept.push(token.clone());
        }
    }
    let idf = |token: &String| {
        let df = docs.iter().filter(|d| d.contains(token)).count() as f64;
        ((n as f64 + 1.0) / (df + 1.0)).ln() + 1.0
    };
    let vectors = docs
        .iter()
        .map(|doc| {
            let mut raw = BTreeMap::new();
            for token in &kept {
                let tf = doc.iter().filter(|t| *t == token).count();
                if tf > 0 {
                    raw.insert(token.clone(), tf as f64 * idf(token));
                }
            }
            let len = raw.values().map(|v| v * v).sum::<f64>().sqrt();
            raw.into_iter().map(|(k, v)| (k, v / len)).collect()
        })
        .collect();
    (kept, vectors)
}

/// All other words ranked by cosine to `query`, best first, ties broken by
/// word. Zero vectors have cosine 0 with everything.
pub fn cosine_ranking(words: &[String], vectors: &[Vec<f64>], query: &str) -> Vec<(String, f64)> {
    let Some(q) = words.iter().position(|w| w == query) else {
        return Vec::new();
    };
    let cos = |a: &[f64], b: &[f64]| {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        if na == 0.0 || nb == 0.0 {
            0.0
        } else {
            dot / (na * nb)
        }
    };
    let mut out: Vec<(String, f64)> = (0..words.len())
        .filter(|&i| i != q)
        .map(|i| (words[i].clone(), cos(&vectors[q], &vectors[i])))
        .collect();
    out.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
    out
}

#[cfg(test)]
mod tests {
    use super::Status::*;
    use super::Symbol::*;
    use super::*;

    #[test]
    fn scope_examples() {
        assert_eq!(scope_oracle(&[PreNeg, Abx], 5), vec![Negated]);
        assert_eq!(scope_oracle(&[Abx, Clause, PreNeg, Abx], 5), vec![Affirmed, Negated]);
        assert_eq!(scope_oracle(&[PreSpec, PreNeg, Abx], 5), vec![Negated]);
        assert_eq!(scope_oracle(&[PreSpec, Abx, PostNeg], 5), vec![Negated]);
        assert_eq!(scope_oracle(&[PreNeg, Filler, Filler, Abx], 2), vec![Affirmed]);
        assert_eq!(scope_oracle(&[PreSpec, Abx, Filler, Abx], 5), vec![Speculated, Speculated]);
    }

    #[test]
    fn separable_svm_hits_zero_training_error() {
        let x = vec![vec![2.0, 1.0], vec![1.5, 2.0], vec![-1.0, -0.5], vec![-2.0, 0.5]];
        let y = vec![1.0, 1.0, -1.0, -1.0];
        let s = svm_oracle(&x, &y, 1e4, 1.0);
        assert!(s.gap().abs() < 1e-6, "gap {}", s.gap());
        for (row, yi) in x.iter().zip(&y) {
            let score = row[0] * s.weights[0] + row[1] * s.weights[1] + s.weights[2];
            assert!(score * yi > 0.0);
        }
    }

    #[test]
    fn weighted_multipliers_bounded() {
        let x = vec![vec![1.0], vec![0.5], vec![-0.2], vec![-1.0], vec![0.1]];
        let y = vec![1.0, -1.0, 1.0, -1.0, 1.0];
        let s = svm_oracle(&x, &y, 0.7, 2.0);
        for (a, yi) in s.alphas.iter().zip(&y) {
            let bound = if *yi > 0.0 { 1.4 } else { 0.7 };
            assert!(*a >= 0.0 && *a <= bound + 1e-12);
        }
        assert!(s.gap() < 1e-8, "gap {}", s.gap());
    }

    #[test]
    fn recount_and_ranking() {
        let docs: Vec<Vec<String>> = [["a", "b"], ["a", "c"], ["b", "b"]]
            .iter()
            .map(|d| d.iter().map(|s| s.to_string()).collect())
            .collect();
        let (vocab, vecs) = tfidf_recount(&docs, 2, 1.0);
        assert_eq!(vocab, vec!["a", "b"]);
        assert_eq!(vecs[2]["b"], 1.0);
        let words: Vec<String> = ["x", "y", "z"].iter().map(|s| s.to_string()).collect();
        let ranked = cosine_ranking(&words, &[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.1]], "x");
        assert_eq!(ranked[0].0, "z");
    }
}
