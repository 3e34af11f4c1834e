//! WebAssembly bindings for the static demo page in `www/`.
//!
//! Every export takes and returns plain strings (JSON for structured
//! results), so the page needs no generated type glue beyond wasm-bindgen.

use std::collections::BTreeMap;

use notewatch::assertion::{Asserter, MentionStatus, DEFAULT_WINDOW};
use notewatch::classifier::{train, LinearModel, PossiblePolicy, TrainConfig};
use notewatch::corpus::{generate_synthetic_corpus, split, Label, LabeledNote, Note, Provenance, SplitSpec, SynthConfig};
use notewatch::eval::{error_breakdown, evaluate, ErrorBucket, EvalReport, TestKind};
use notewatch::features::{build_vocabulary, vectorize, DEFAULT_MAX_DF_RATIO, DEFAULT_MIN_DF};
use notewatch::lexicon::Lexicon;
use notewatch::textnorm::Tokenizer;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

/// A run of note text with its rendering class: `plain`, `trigger`, or a
/// mention status (`affirmed`, `negated`, `speculated`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Segment {
    pub text: String,
    pub kind: &'static str,
}

#[derive(Debug, Clone, Serialize)]
pub struct Assertion {
    pub label: Label,
    pub segments: Vec<Segment>,
}

fn status_kind(s: MentionStatus) -> &'static str {
    match s {
        MentionStatus::Affirmed => "affirmed",
        MentionStatus::Negated => "negated",
        MentionStatus::Speculated => "speculated",
    }
}

fn trim_punct(text: &str, start: usize, end: usize) -> (usize, usize) {
    let inner = text[start..end].trim_matches(|c: char| c.is_ascii_punctuation());
    if inner.is_empty() {
        return (start, end);
    }
    let s = start + text[start..end].find(inner).unwrap_or(0);
    (s, s + inner.len())
}

/// Labels `text` and splits it into highlight segments.
pub fn assert_text(text: &str, window: usize) -> Result<Assertion, String> {
    let note = Note::new("demo", text).map_err(|e| e.to_string())?;
    let asserter = Asserter::new(&Lexicon::starter(), window.max(1));
    let tokenized = asserter.tokenizer().tokenize(&note);
    let weak = asserter.weak_label(&tokenized);

    let mut spans: Vec<(usize, usize, &'static str)> = Vec::new();
    for m in &weak.mentions {
        let tokens = &tokenized.sentences[m.sentence_index].tokens;
        let byte_span = |(a, b): (usize, usize)| trim_punct(text, tokens[a].char_span.0, tokens[b - 1].char_span.1);
        let (s, e) = byte_span(m.token_span);
        spans.push((s, e, status_kind(m.status)));
        if let Some(t) = &m.trigger {
            let (s, e) = byte_span(t.position);
            spans.push((s, e, "trigger"));
        }
    }
    spans.sort();
    spans.dedup();

    let mut segments = Vec::new();
    let mut at = 0;
    for (s, e, kind) in spans {
        if s < at {
            continue;
        }
        if s > at {
            segments.push(Segment { text: text[at..s].to_owned(), kind: "plain" });
        }
        segments.push(Segment { text: text[s..e].to_owned(), kind });
        at = e;
    }
    if at < text.len() {
        segments.push(Segment { text: text[at..].to_owned(), kind: "plain" });
    }
    Ok(Assertion { label: weak.label, segments })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default)]
pub struct ExperimentParams {
    pub size: usize,
    pub positive_rate: f64,
    pub speculated_rate: f64,
    pub seed: u64,
    pub cost_c: f64,
    pub positive_class_weight: f64,
    pub possible_policy: PossiblePolicy,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            size: 2000,
            positive_rate: 0.29,
            speculated_rate: 0.05,
            seed: 7,
            cost_c: 2.0,
            positive_class_weight: 2.0,
            possible_policy: PossiblePolicy::AsNegative,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentResult {
    pub truth_counts: BTreeMap<&'static str, usize>,
    pub weak_agreement: f64,
    pub vocab_size: usize,
    pub epochs_run: usize,
    pub auto: EvalReport,
    pub gold: EvalReport,
    pub gold_false_negatives: BTreeMap<ErrorBucket, usize>,
    pub top_positive: Vec<(String, f64)>,
    pub top_negative: Vec<(String, f64)>,
}

/// Synthetic corpus, weak labels, 70/30 split, SVM, then evaluation against
/// the weak labels (auto) and the generator truth (gold).
pub fn run_experiment(p: &ExperimentParams) -> Result<(ExperimentResult, LinearModel), String> {
    let err = |e: notewatch::Error| e.to_string();
    let synth = generate_synthetic_corpus(&SynthConfig::new(p.size, p.positive_rate, p.speculated_rate, p.seed))
        .map_err(err)?;
    let lexicon = Lexicon::starter();
    let asserter = Asserter::new(&lexicon, DEFAULT_WINDOW);
    let auto: Vec<LabeledNote> = synth
        .notes
        .iter()
        .map(|n| LabeledNote {
            note: n.note.clone(),
            label: asserter.label_note(&n.note).label,
            provenance: Provenance::WeakRule,
        })
        .collect();
    let agree = auto.iter().zip(&synth.notes).filter(|(a, t)| a.label == t.label).count();

    let spec = SplitSpec::default();
    let (train_set, auto_test) = split(&auto, &spec).map_err(err)?;
    let (_, truth_test) = split(&synth.notes, &spec).map_err(err)?;

    let cfg = TrainConfig {
        cost_c: p.cost_c,
        positive_class_weight: p.positive_class_weight,
        possible_note_policy: p.possible_policy,
        ..TrainConfig::default()
    };
    let tk = Tokenizer::default();
    let used: Vec<(&LabeledNote, Label)> = train_set
        .iter()
        .filter_map(|n| cfg.possible_note_policy.map(n.label).map(|l| (n, l)))
        .collect();
    let tokenized: Vec<_> = used.iter().map(|(n, _)| tk.tokenize(&n.note)).collect();
    let vocab = build_vocabulary(&tokenized, DEFAULT_MIN_DF, DEFAULT_MAX_DF_RATIO).map_err(err)?;
    let data: Vec<_> = tokenized.iter().zip(&used).map(|(t, (_, l))| (vectorize(t, &vocab), *l)).collect();
    let model = train(&data, vocab, &cfg).map_err(err)?;

    let gold: Vec<LabeledNote> = truth_test
        .into_iter()
        .map(|n| LabeledNote { provenance: Provenance::GoldHuman, ..n })
        .collect();
    let gold_means = TestKind::Gold.default_positive_means();
    let auto_report = evaluate(&model, &auto_test, &[Label::Positive]).map_err(err)?;
    let gold_report = evaluate(&model, &gold, &gold_means).map_err(err)?;
    let breakdown = error_breakdown(&model, &gold, &lexicon, &gold_means).map_err(err)?;

    let mut ranked: Vec<(String, f64)> = model
        .vocab
        .tokens()
        .iter()
        .cloned()
        .zip(model.weights.iter().copied())
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let top_positive = ranked.iter().take(10).cloned().collect();
    let top_negative = ranked.iter().rev().take(10).cloned().collect();

    let mut truth_counts = BTreeMap::new();
    for n in &synth.notes {
        *truth_counts.entry(n.label.as_str()).or_default() += 1;
    }
    let result = ExperimentResult {
        truth_counts,
        weak_agreement: 100.0 * agree as f64 / auto.len() as f64,
        vocab_size: model.vocab.len(),
        epochs_run: model.training_summary.epochs_run,
        auto: auto_report,
        gold: gold_report,
        gold_false_negatives: breakdown.fn_buckets,
        top_positive,
        top_negative,
    };
    Ok((result, model))
}

#[derive(Debug, Clone, Serialize)]
pub struct Score {
    pub label: Label,
    pub score: f64,
    pub known_tokens: usize,
}

pub fn score_text(model: &LinearModel, text: &str) -> Result<Score, String> {
    let note = Note::new("demo", text).map_err(|e| e.to_string())?;
    let v = vectorize(&Tokenizer::default().tokenize(&note), &model.vocab);
    let p = model.predict(&v).map_err(|e| e.to_string())?;
    Ok(Score { label: p.label, score: p.score, known_tokens: v.len() })
}

fn to_js<T: Serialize>(r: Result<T, String>) -> Result<String, JsValue> {
    r.map(|v| serde_json::to_string(&v).expect("results serialize"))
        .map_err(|e| JsValue::from_str(&e))
}

/// Highlight segments and label for `text`, as JSON.
#[wasm_bindgen(js_name = assertNote)]
pub fn assert_note(text: &str, window: usize) -> Result<String, JsValue> {
    to_js(assert_text(text, window))
}

/// Keeps the most recently trained model so notes can be scored against it.
#[wasm_bindgen]
#[derive(Default)]
pub struct Session {
    model: Option<LinearModel>,
}

#[wasm_bindgen]
impl Session {
    #[wasm_bindgen(constructor)]
    pub fn new() -> Session {
        Session::default()
    }

    /// Runs an experiment from JSON parameters (missing keys take defaults).
    #[wasm_bindgen(js_name = runExperiment)]
    pub fn run_experiment(&mut self, params_json: &str) -> Result<String, JsValue> {
        let params: ExperimentParams =
            serde_json::from_str(params_json).map_err(|e| JsValue::from_str(&e.to_string()))?;
        to_js(run_experiment(&params).map(|(result, model)| {
            self.model = Some(model);
            result
        }))
    }

    /// Scores `text` with the last trained model.
    #[wasm_bindgen(js_name = scoreNote)]
    pub fn score_note(&self, text: &str) -> Result<String, JsValue> {
        let model = self
            .model
            .as_ref()
            .ok_or_else(|| JsValue::from_str("run an experiment first"))?;
        to_js(score_text(model, text))
    }
}
