//! Precision/recall/F1 reports and false-negative/false-positive breakdowns.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::assertion::{Asserter, AssertedMention, MentionStatus, DEFAULT_WINDOW};
use crate::classifier::LinearModel;
use crate::corpus::{single_provenance, Label, LabeledNote, Provenance};
use crate::features::vectorize;
use crate::lexicon::Lexicon;
use crate::textnorm::Tokenizer;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum TestKind {
    Auto,
    Gold,
    Synth,
}

impl From<Provenance> for TestKind {
    fn from(p: Provenance) -> Self {
        match p {
            Provenance::WeakRule => TestKind::Auto,
            Provenance::GoldHuman => TestKind::Gold,
            Provenance::SynthTruth => TestKind::Synth,
        }
    }
}

impl TestKind {
    /// Labels counted as positive unless the caller says otherwise.
    pub fn default_positive_means(self) -> Vec<Label> {
        match self {
            TestKind::Gold => vec![Label::Positive, Label::Possible],
            TestKind::Auto | TestKind::Synth => vec![Label::Positive],
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn record(&mut self, actual_positive: bool, predicted_positive: bool) {
        match (actual_positive, predicted_positive) {
            (true, true) => self.tp += 1,
            (false, true) => self.fp += 1,
            (false, false) => self.tn += 1,
            (true, false) => self.fn_ += 1,
        }
    }
}

fn percent(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| 100.0 * num as f64 / den as f64)
}

/// Harmonic mean of two percentages; absent when either is absent or both are 0.
pub fn f1(precision: Option<f64>, recall: Option<f64>) -> Option<f64> {
    let (p, r) = (precision?, recall?);
    (p + r > 0.0).then(|| 2.0 * p * r / (p + r))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
    pub confusion: Confusion,
    pub test_size: usize,
    pub excluded: usize,
    pub test_kind: TestKind,
    pub positive_means: Vec<Label>,
}

impl EvalReport {
    pub fn from_confusion(
        confusion: Confusion,
        test_kind: TestKind,
        positive_means: Vec<Label>,
        excluded: usize,
    ) -> Self {
        let precision = percent(confusion.tp, confusion.tp + confusion.fp);
        let recall = percent(confusion.tp, confusion.tp + confusion.fn_);
        EvalReport {
            precision,
            recall,
            f1: f1(precision, recall),
            confusion,
            test_size: confusion.total(),
            excluded,
            test_kind,
            positive_means,
        }
    }

    /// Two-decimal table in the layout of a results table.
    pub fn to_table(&self) -> String {
        let cell = |v: Option<f64>| v.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.2}"));
        let kind = match self.test_kind {
            TestKind::Auto => "auto",
            TestKind::Gold => "gold",
            TestKind::Synth => "synth",
        };
        let c = &self.confusion;
        let mut out = String::new();
        let _ = writeln!(out, "{:<8} {:>9} {:>9} {:>9}", "test", "precision", "recall", "f1");
        let _ = writeln!(
            out,
            "{kind:<8} {:>9} {:>9} {:>9}",
            cell(self.precision),
            cell(self.recall),
            cell(self.f1)
        );
        let _ = writeln!(
            out,
            "n={} excluded={} tp={} fp={} tn={} fn={}",
            self.test_size, self.excluded, c.tp, c.fp, c.tn, c.fn_
        );
        out
    }
}

fn check_positive_means(positive_means: &[Label]) -> Result<()> {
    if positive_means.is_empty() || positive_means.contains(&Label::Negative) {
        return Err(Error::InvalidArgument(format!(
            "positive_means must be a non-empty set without NEGATIVE, got {positive_means:?}"
        )));
    }
    Ok(())
}

fn test_kind(test: &[LabeledNote]) -> Result<TestKind> {
    Ok(single_provenance(test)?.map_or(TestKind::Auto, TestKind::from))
}

/// (index into test, actually positive, score)
type Scored = (usize, bool, f64);

/// Scored test notes and the number excluded.
fn score(model: &LinearModel, test: &[LabeledNote], positive_means: &[Label]) -> Result<(Vec<Scored>, usize)> {
    check_positive_means(positive_means)?;
    let tokenizer = Tokenizer::default();
    let mut scored = Vec::with_capacity(test.len());
    let mut excluded = 0;
    for (i, ln) in test.iter().enumerate() {
        let positive = positive_means.contains(&ln.label);
        if !positive && ln.label != Label::Negative {
            excluded += 1;
            continue;
        }
        let v = vectorize(&tokenizer.tokenize(&ln.note), &model.vocab);
        scored.push((i, positive, model.predict(&v)?.score));
    }
    if scored.is_empty() {
        return Err(Error::EmptyTestSet { excluded });
    }
    Ok((scored, excluded))
}

/// Scores `test` with `model`. Notes whose label is neither NEGATIVE nor in
/// `positive_means` are excluded and counted.
pub fn evaluate(model: &LinearModel, test: &[LabeledNote], positive_means: &[Label]) -> Result<EvalReport> {
    let kind = test_kind(test)?;
    let (scored, excluded) = score(model, test, positive_means)?;
    let mut confusion = Confusion::default();
    for &(_, actual, s) in &scored {
        confusion.record(actual, s > 0.0);
    }
    Ok(EvalReport::from_confusion(confusion, kind, positive_means.to_vec(), excluded))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorBucket {
    /// No affirmed mention but at least one speculated one.
    SuspicionOnly,
    /// At least one affirmed mention.
    Affirmed,
    /// Mentions exist and all are negated.
    NegatedOnly,
    NoMention,
}

impl ErrorBucket {
    pub fn of(mentions: &[AssertedMention]) -> Self {
        let has = |s| mentions.iter().any(|m| m.status == s);
        if has(MentionStatus::Affirmed) {
            ErrorBucket::Affirmed
        } else if has(MentionStatus::Speculated) {
            ErrorBucket::SuspicionOnly
        } else if mentions.is_empty() {
            ErrorBucket::NoMention
        } else {
            ErrorBucket::NegatedOnly
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorCase {
    pub note_id: String,
    pub label: Label,
    pub score: f64,
    pub bucket: ErrorBucket,
    pub mentions: Vec<AssertedMention>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBreakdown {
    pub false_negatives: Vec<ErrorCase>,
    pub false_positives: Vec<ErrorCase>,
    pub fn_buckets: BTreeMap<ErrorBucket, usize>,
    pub fp_buckets: BTreeMap<ErrorBucket, usize>,
}

impl ErrorBreakdown {
    pub fn is_empty(&self) -> bool {
        self.false_negatives.is_empty() && self.false_positives.is_empty()
    }

    /// Share of false negatives in `bucket`, absent when there are none.
    pub fn fn_share(&self, bucket: ErrorBucket) -> Option<f64> {
        let n = self.false_negatives.len();
        (n > 0).then(|| *self.fn_buckets.get(&bucket).unwrap_or(&0) as f64 / n as f64)
    }
}

/// Lists every misclassified note with its rule-based mention assertions.
pub fn error_breakdown(
    model: &LinearModel,
    test: &[LabeledNote],
    lexicon: &Lexicon,
    positive_means: &[Label],
) -> Result<ErrorBreakdown> {
    let (scored, _) = score(model, test, positive_means)?;
    let asserter = Asserter::new(lexicon, DEFAULT_WINDOW);
    let mut out = ErrorBreakdown::default();
    for (i, actual, s) in scored {
        if actual == (s > 0.0) {
            continue;
        }
        let ln = &test[i];
        let mentions = asserter.label_note(&ln.note).mentions;
        let bucket = ErrorBucket::of(&mentions);
        let case = ErrorCase {
            note_id: ln.note.note_id.clone(),
            label: ln.label,
            score: s,
            bucket,
            mentions,
        };
        let (list, buckets) = if actual {
            (&mut out.false_negatives, &mut out.fn_buckets)
        } else {
            (&mut out.false_positives, &mut out.fp_buckets)
        };
        *buckets.entry(bucket).or_default() += 1;
        list.push(case);
    }
    Ok(out)
}
