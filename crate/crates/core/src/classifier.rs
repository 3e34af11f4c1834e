//! Class-weighted, L2-regularized linear SVM trained by dual coordinate
//! descent, with prediction and a checksummed model file.
//!
//! The primal problem is
//!
//! ```text
//! min_w  1/2 |w|^2 + C * sum_i c_i * max(0, 1 - y_i * w.x_i)
//! ```
//!
//! where every `x_i` is augmented with a constant 1 feature (so the bias is
//! regularized) and `c_i` is the positive class weight for positives and 1
//! otherwise. The dual is a box-constrained QP with `0 <= a_i <= c_i * C`,
//! solved one coordinate at a time in a seeded random order per epoch.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Label;
use crate::features::{hex, SparseVector, Vocabulary};
use crate::{Error, Result};

/// What to do with POSSIBLE notes when building binary training data.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PossiblePolicy {
    Exclude,
    AsNegative,
    AsPositive,
}

impl PossiblePolicy {
    /// Maps a note label to a training label, or `None` to drop the note.
    pub fn map(self, label: Label) -> Option<Label> {
        match (label, self) {
            (Label::Possible, PossiblePolicy::Exclude) => None,
            (Label::Possible, PossiblePolicy::AsNegative) => Some(Label::Negative),
            (Label::Possible, PossiblePolicy::AsPositive) => Some(Label::Positive),
            (l, _) => Some(l),
        }
    }
}

impl FromStr for PossiblePolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "EXCLUDE" => Ok(PossiblePolicy::Exclude),
            "AS_NEGATIVE" => Ok(PossiblePolicy::AsNegative),
            "AS_POSITIVE" => Ok(PossiblePolicy::AsPositive),
            other => Err(Error::InvalidArgument(format!("unknown POSSIBLE policy {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub cost_c: f64,
    pub positive_class_weight: f64,
    pub tolerance: f64,
    pub max_epochs: usize,
    pub seed: u64,
    pub possible_note_policy: PossiblePolicy,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            cost_c: 2.0,
            positive_class_weight: 2.0,
            tolerance: 1e-3,
            max_epochs: 1000,
            seed: 42,
            possible_note_policy: PossiblePolicy::Exclude,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(format!("train config: {m}")));
        if !(self.cost_c > 0.0 && self.cost_c.is_finite()) {
            return bad(format!("cost_c must be > 0, got {}", self.cost_c));
        }
        if !(self.positive_class_weight > 0.0 && self.positive_class_weight.is_finite()) {
            return bad(format!(
                "positive_class_weight must be > 0, got {}",
                self.positive_class_weight
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return bad(format!("tolerance must be > 0, got {}", self.tolerance));
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs_run: usize,
    pub final_violation: f64,
    pub objective: f64,
    pub dual_objective: f64,
}

/// Raw solver output: weights (bias last), dual variables and the primal and
/// dual objectives at the end of every epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub weights: Vec<f64>,
    pub alphas: Vec<f64>,
    pub summary: TrainingSummary,
    pub epoch_objectives: Vec<f64>,
    pub epoch_duals: Vec<f64>,
}

fn sign(label: Label) -> Result<f64> {
    match label {
        Label::Positive => Ok(1.0),
        Label::Negative => Ok(-1.0),
        Label::Possible => Err(Error::InvalidArgument(
            "POSSIBLE is not a binary training label; apply a POSSIBLE policy first".into(),
        )),
    }
}

fn dot_aug(w: &[f64], x: &SparseVector) -> f64 {
    let dim = w.len() - 1;
    x.entries().iter().map(|&(i, v)| w[i as usize] * v).sum::<f64>() + w[dim]
}

/// Primal objective of `weights` (bias last) on `data`.
pub fn primal_objective(weights: &[f64], data: &[(SparseVector, Label)], config: &TrainConfig) -> f64 {
    let reg = 0.5 * weights.iter().map(|w| w * w).sum::<f64>();
    let loss: f64 = data
        .iter()
        .map(|(x, l)| {
            let y = if *l == Label::Positive { 1.0 } else { -1.0 };
            let c = if y > 0.0 { config.positive_class_weight } else { 1.0 };
            c * (1.0 - y * dot_aug(weights, x)).max(0.0)
        })
        .sum();
    reg + config.cost_c * loss
}

/// Solves the dual problem over feature space `0..dim` (plus bias).
pub fn fit(data: &[(SparseVector, Label)], dim: usize, config: &TrainConfig) -> Result<Solution> {
    config.validate()?;
    let mut ys = Vec::with_capacity(data.len());
    for (row, (x, label)) in data.iter().enumerate() {
        ys.push(sign(*label)?);
        for &(index, v) in x.entries() {
            if index as usize >= dim {
                return Err(Error::IndexOutOfRange { index, size: dim });
            }
            if !v.is_finite() {
                return Err(Error::NonFiniteFeature { row, index });
            }
        }
    }
    let has_pos = ys.iter().any(|&y| y > 0.0);
    let has_neg = ys.iter().any(|&y| y < 0.0);
    if !(has_pos && has_neg) {
        let only = if has_pos { "POSITIVE" } else if has_neg { "NEGATIVE" } else { "none" };
        return Err(Error::SingleClass(only.into()));
    }

    let n = data.len();
    let upper: Vec<f64> = ys
        .iter()
        .map(|&y| config.cost_c * if y > 0.0 { config.positive_class_weight } else { 1.0 })
        .collect();
    let qd: Vec<f64> = data
        .iter()
        .map(|(x, _)| x.entries().iter().map(|e| e.1 * e.1).sum::<f64>() + 1.0)
        .collect();

    let mut w = vec![0.0; dim + 1];
    let mut alpha = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut epoch_objectives = Vec::new();
    let mut epoch_duals = Vec::new();
    let dual = |alpha: &[f64], w: &[f64]| alpha.iter().sum::<f64>() - 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    let mut violation = f64::INFINITY;
    let mut epochs_run = 0;

    while epochs_run < config.max_epochs {
        order.shuffle(&mut rng);
        violation = 0.0;
        for &i in &order {
            let (x, _) = &data[i];
            let y = ys[i];
            let g = y * dot_aug(&w, x) - 1.0;
            let pg = if alpha[i] <= 0.0 {
                g.min(0.0)
            } else if alpha[i] >= upper[i] {
                g.max(0.0)
            } else {
                g
            };
            violation = violation.max(pg.abs());
            if pg != 0.0 {
                let old = alpha[i];
                alpha[i] = (old - g / qd[i]).clamp(0.0, upper[i]);
                let step = (alpha[i] - old) * y;
                if step != 0.0 {
                    for &(j, v) in x.entries() {
                        w[j as usize] += step * v;
                    }
                    w[dim] += step;
                }
            }
        }
        epochs_run += 1;
        epoch_objectives.push(primal_objective(&w, data, config));
        epoch_duals.push(dual(&alpha, &w));
        if violation < config.tolerance {
            break;
        }
    }

    let objective = *epoch_objectives.last().expect("at least one epoch");
    let dual_objective = *epoch_duals.last().expect("at least one epoch");
    Ok(Solution {
        weights: w,
        alphas: alpha,
        summary: TrainingSummary {
            epochs_run,
            final_violation: violation,
            objective,
            dual_objective,
        },
        epoch_objectives,
        epoch_duals,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    /// Feature weights followed by the bias.
    pub weights: Vec<f64>,
    pub vocab: Vocabulary,
    pub train_config: TrainConfig,
    pub training_summary: TrainingSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

pub fn train(data: &[(SparseVector, Label)], vocab: Vocabulary, config: &TrainConfig) -> Result<LinearModel> {
    let solution = fit(data, vocab.len(), config)?;
    Ok(LinearModel {
        weights: solution.weights,
        vocab,
        train_config: config.clone(),
        training_summary: solution.summary,
    })
}

impl LinearModel {
    pub fn bias(&self) -> f64 {
        *self.weights.last().expect("weights include the bias")
    }

    /// `score = w.x + bias`; POSITIVE iff the score is strictly positive.
    pub fn predict(&self, v: &SparseVector) -> Result<Prediction> {
        let size = self.vocab.len();
        if let Some(&(index, _)) = v.entries().iter().find(|e| e.0 as usize >= size) {
            return Err(Error::IndexOutOfRange { index, size });
        }
        let score = dot_aug(&self.weights, v);
        let label = if score > 0.0 { Label::Positive } else { Label::Negative };
        Ok(Prediction { label, score })
    }
}

pub fn predict(model: &LinearModel, v: &SparseVector) -> Result<Prediction> {
    model.predict(v)
}

pub const MODEL_FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "notewatch-model v";

struct Body<'a>(&'a LinearModel);

impl fmt::Display for Body<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = self.0;
        writeln!(f, "vocab_size {}", m.vocab.len())?;
        writeln!(f, "corpus_size {}", m.vocab.corpus_size())?;
        writeln!(f, "config {}", serde_json::to_string(&m.train_config).map_err(|_| fmt::Error)?)?;
        writeln!(f, "summary {}", serde_json::to_string(&m.training_summary).map_err(|_| fmt::Error)?)?;
        writeln!(f, "bias {:e}", m.bias())?;
        for (i, token) in m.vocab.tokens().iter().enumerate() {
            writeln!(f, "{token}\t{}\t{:e}", m.vocab.df(i as u32), m.weights[i])?;
        }
        Ok(())
    }
}

/// Serializes the model. Layout:
///
/// ```text
/// notewatch-model v1
/// sha256 <hex digest of everything below this line>
/// vocab_size <V>
/// corpus_size <N>
/// config <TrainConfig as JSON>
/// summary <TrainingSummary as JSON>
/// bias <f64>
/// <token>\t<df>\t<weight>        (V rows, lexicographic)
/// ```
pub fn model_to_string(model: &LinearModel) -> String {
    let body = Body(model).to_string();
    let digest = hex(&Sha256::digest(body.as_bytes()));
    format!("{MAGIC}{MODEL_FORMAT_VERSION}\nsha256 {digest}\n{body}")
}

pub fn save_model(model: &LinearModel, path: &Path) -> Result<()> {
    fs::write(path, model_to_string(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<LinearModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    model_from_str(&text)
}

pub fn model_from_str(text: &str) -> Result<LinearModel> {
    let (first, rest) = text
        .split_once('\n')
        .ok_or_else(|| Error::ModelFormat("missing header".into()))?;
    let version = first
        .strip_prefix(MAGIC)
        .ok_or_else(|| Error::ModelFormat("not a notewatch model file".into()))?;
    if version.parse::<u32>().ok() != Some(MODEL_FORMAT_VERSION) {
        return Err(Error::ModelVersion {
            found: version.to_owned(),
            supported: MODEL_FORMAT_VERSION,
        });
    }
    let (sum_line, body) = rest.split_once('\n').ok_or(Error::ModelChecksum)?;
    let expected = sum_line.strip_prefix("sha256 ").ok_or(Error::ModelChecksum)?;
    if hex(&Sha256::digest(body.as_bytes())) != expected {
        return Err(Error::ModelChecksum);
    }

    let mut lines = body.lines();
    let mut field = |key: &str| -> Result<&str> {
        lines
            .next()
            .and_then(|l| l.strip_prefix(key))
            .and_then(|l| l.strip_prefix(' '))
            .ok_or_else(|| Error::ModelFormat(format!("expected `{key}` line")))
    };
    let num = |s: &str, what: &str| -> Result<usize> {
        s.parse().map_err(|_| Error::ModelFormat(format!("bad {what} {s:?}")))
    };
    let vocab_size = num(field("vocab_size")?, "vocab_size")?;
    let corpus_size = num(field("corpus_size")?, "corpus_size")?;
    let train_config: TrainConfig = serde_json::from_str(field("config")?)
        .map_err(|e| Error::ModelFormat(format!("config: {e}")))?;
    let training_summary: TrainingSummary = serde_json::from_str(field("summary")?)
        .map_err(|e| Error::ModelFormat(format!("summary: {e}")))?;
    let bias: f64 = field("bias")?
        .parse()
        .map_err(|_| Error::ModelFormat("bad bias".into()))?;

    let mut rows = Vec::with_capacity(vocab_size);
    let mut weights = Vec::with_capacity(vocab_size + 1);
    for line in lines {
        let mut cols = line.split('\t');
        let (Some(token), Some(df), Some(w), None) = (cols.next(), cols.next(), cols.next(), cols.next()) else {
            return Err(Error::ModelFormat(format!("bad vocabulary row {line:?}")));
        };
        let df: u32 = df.parse().map_err(|_| Error::ModelFormat(format!("bad df in {line:?}")))?;
        let w: f64 = w.parse().map_err(|_| Error::ModelFormat(format!("bad weight in {line:?}")))?;
        rows.push((token.to_owned(), df));
        weights.push(w);
    }
    if rows.len() != vocab_size {
        return Err(Error::ModelFormat(format!(
            "header declares {vocab_size} tokens, found {}",
            rows.len()
        )));
    }
    weights.push(bias);
    Ok(LinearModel {
        weights,
        vocab: Vocabulary::from_parts(rows, corpus_size)?,
        train_config,
        training_summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(pairs: &[(u32, f64)]) -> SparseVector {
        SparseVector::from_pairs(pairs.to_vec())
    }

    fn vocab(n: usize) -> Vocabulary {
        Vocabulary::from_parts((0..n).map(|i| (format!("t{i:03}"), 1)).collect(), 10).unwrap()
    }

    fn model(weights: Vec<f64>) -> LinearModel {
        LinearModel {
            vocab: vocab(weights.len() - 1),
            weights,
            train_config: TrainConfig::default(),
            training_summary: TrainingSummary {
                epochs_run: 0,
                final_violation: 0.0,
                objective: 0.0,
                dual_objective: 0.0,
            },
        }
    }

    fn separable() -> Vec<(SparseVector, Label)> {
        vec![
            (sv(&[(0, 2.0), (1, 1.0)]), Label::Positive),
            (sv(&[(0, 1.5), (1, 2.0)]), Label::Positive),
            (sv(&[(0, -1.0), (1, -0.5)]), Label::Negative),
            (sv(&[(0, -2.0), (1, 0.5)]), Label::Negative),
        ]
    }

    #[test]
    fn toy_predict_arithmetic() {
        let m = model(vec![1.0, -1.0, 0.0]);
        let p = m.predict(&sv(&[(0, 0.6), (1, 0.8)])).unwrap();
        assert!((p.score + 0.2).abs() < 1e-12);
        assert_eq!(p.label, Label::Negative);
    }

    #[test]
    fn zero_model_scores_bias() {
        let m = model(vec![0.0, 0.0, 0.5]);
        assert_eq!(m.predict(&sv(&[(0, 1.0)])).unwrap().score, 0.5);
        assert_eq!(m.predict(&SparseVector::default()).unwrap().label, Label::Positive);
        let m = model(vec![0.0, 0.0, 0.0]);
        assert_eq!(m.predict(&SparseVector::default()).unwrap().label, Label::Negative);
    }

    #[test]
    fn out_of_range_index() {
        let m = model(vec![1.0, 1.0, 0.0]);
        assert!(matches!(
            m.predict(&sv(&[(5, 1.0)])),
            Err(Error::IndexOutOfRange { index: 5, size: 2 })
        ));
    }

    #[test]
    fn separable_toy_is_fit() {
        let cfg = TrainConfig { tolerance: 1e-10, ..TrainConfig::default() };
        let m = train(&separable(), vocab(2), &cfg).unwrap();
        for (x, l) in separable() {
            assert_eq!(m.predict(&x).unwrap().label, l);
        }
        let s = &m.training_summary;
        assert!(s.objective - s.dual_objective < 1e-6);
    }

    #[test]
    fn single_class_and_bad_input() {
        let pos: Vec<_> = separable().into_iter().filter(|p| p.1 == Label::Positive).collect();
        assert!(matches!(fit(&pos, 2, &TrainConfig::default()), Err(Error::SingleClass(_))));
        let mut nan = separable();
        nan[1].0 = sv(&[(0, f64::NAN)]);
        assert!(matches!(
            fit(&nan, 2, &TrainConfig::default()),
            Err(Error::NonFiniteFeature { row: 1, index: 0 })
        ));
        let mut possible = separable();
        possible[0].1 = Label::Possible;
        assert!(fit(&possible, 2, &TrainConfig::default()).is_err());
        assert!(fit(&separable(), 1, &TrainConfig::default()).is_err());
        assert!(fit(&separable(), 2, &TrainConfig { cost_c: 0.0, ..TrainConfig::default() }).is_err());
    }

    #[test]
    fn deterministic_weights() {
        let a = fit(&separable(), 2, &TrainConfig::default()).unwrap();
        let b = fit(&separable(), 2, &TrainConfig::default()).unwrap();
        assert_eq!(
            a.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>(),
            b.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn dual_box_respects_class_weight() {
        let mut data = separable();
        // an outlier positive deep in negative territory hits its upper bound
        data.push((sv(&[(0, -1.8), (1, 0.2)]), Label::Positive));
        let cfg = TrainConfig { cost_c: 0.5, positive_class_weight: 2.0, tolerance: 1e-9, ..TrainConfig::default() };
        let s = fit(&data, 2, &cfg).unwrap();
        for (a, (_, l)) in s.alphas.iter().zip(&data) {
            let bound = if *l == Label::Positive { 1.0 } else { 0.5 };
            assert!(*a >= 0.0 && *a <= bound + 1e-12);
        }
        assert!((s.alphas[4] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn policy_mapping() {
        assert_eq!(PossiblePolicy::Exclude.map(Label::Possible), None);
        assert_eq!(PossiblePolicy::AsNegative.map(Label::Possible), Some(Label::Negative));
        assert_eq!(PossiblePolicy::AsPositive.map(Label::Positive), Some(Label::Positive));
        assert_eq!("as-negative".parse::<PossiblePolicy>().unwrap(), PossiblePolicy::AsNegative);
    }

    fn trained() -> LinearModel {
        let cfg = TrainConfig { tolerance: 1e-8, ..TrainConfig::default() };
        train(&separable(), vocab(2), &cfg).unwrap()
    }

    #[test]
    fn save_load_predicts_identically() {
        let m = trained();
        let back = model_from_str(&model_to_string(&m)).unwrap();
        assert_eq!(back, m);
        for (x, _) in separable() {
            let (a, b) = (m.predict(&x).unwrap(), back.predict(&x).unwrap());
            assert!((a.score - b.score).abs() < 1e-9);
        }
        assert_eq!(model_to_string(&back), model_to_string(&m));
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let text = model_to_string(&trained());
        let cut = &text[..text.len() - 7];
        assert!(matches!(model_from_str(cut), Err(Error::ModelChecksum)));
        let tampered = text.replace("bias ", "bias 1");
        assert!(matches!(model_from_str(&tampered), Err(Error::ModelChecksum)));
    }

    #[test]
    fn future_version_rejected() {
        let text = model_to_string(&trained()).replacen("v1", "v2", 1);
        match model_from_str(&text) {
            Err(Error::ModelVersion { found, supported }) => {
                assert_eq!(found, "2");
                assert_eq!(supported, 1);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(model_from_str("garbage\n"), Err(Error::ModelFormat(_))));
    }

    proptest::proptest! {
        #[test]
        fn input_scaling_preserves_order(factor in 0.01f64..100.0) {
            let m = trained();
            let xs: Vec<SparseVector> = vec![
                sv(&[(0, 0.3), (1, -0.2)]),
                sv(&[(0, -0.7)]),
                sv(&[(1, 0.9)]),
                sv(&[(0, 0.1), (1, 0.1)]),
            ];
            let order = |vs: &[SparseVector]| {
                let scores: Vec<f64> = vs.iter().map(|x| m.predict(x).unwrap().score - m.bias()).collect();
                let mut idx: Vec<usize> = (0..vs.len()).collect();
                idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
                idx
            };
            let scaled: Vec<SparseVector> = xs.iter().map(|x| x.scaled(factor)).collect();
            proptest::prop_assert_eq!(order(&xs), order(&scaled));
        }
    }
}
