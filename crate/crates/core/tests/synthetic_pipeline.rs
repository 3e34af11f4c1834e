use notewatch::assertion::{Asserter, DEFAULT_WINDOW};
use notewatch::classifier::{load_model, save_model, train, PossiblePolicy, TrainConfig};
use notewatch::corpus::{generate_synthetic_corpus, split, Label, LabeledNote, Provenance, SplitSpec, SynthConfig};
use notewatch::eval::{error_breakdown, evaluate, ErrorBucket, TestKind};
use notewatch::features::{build_vocabulary, vectorize, DEFAULT_MAX_DF_RATIO, DEFAULT_MIN_DF};
use notewatch::lexicon::Lexicon;

fn weak(notes: &[LabeledNote], lexicon: &Lexicon) -> Vec<LabeledNote> {
    let a = Asserter::new(lexicon, DEFAULT_WINDOW);
    notes
        .iter()
        .map(|n| LabeledNote {
            note: n.note.clone(),
            label: a.label_note(&n.note).label,
            provenance: Provenance::WeakRule,
        })
        .collect()
}

#[test]
fn weak_labels_train_and_evaluate() {
    let synth = generate_synthetic_corpus(&SynthConfig::new(3000, 0.29, 0.05, 5)).unwrap();
    let lexicon = Lexicon::starter();
    let auto = weak(&synth.notes, &lexicon);
    let disagreements: Vec<&str> = auto
        .iter()
        .zip(&synth.notes)
        .filter(|(a, t)| a.label != t.label)
        .map(|(a, _)| a.note.note_id.as_str())
        .collect();
    assert!(disagreements.len() as f64 <= 0.005 * 3000.0);
    assert!(disagreements.iter().all(|id| synth.oov_injected.contains(*id)));

    let (train_set, test_set) = split(&auto, &SplitSpec::default()).unwrap();
    let tk = lexicon.tokenizer();
    let tokenized: Vec<_> = train_set.iter().map(|n| tk.tokenize(&n.note)).collect();
    let vocab = build_vocabulary(&tokenized, DEFAULT_MIN_DF, DEFAULT_MAX_DF_RATIO).unwrap();
    let cfg = TrainConfig::default();
    let data: Vec<_> = train_set
        .iter()
        .zip(&tokenized)
        .filter_map(|(n, t)| cfg.possible_note_policy.map(n.label).map(|l| (vectorize(t, &vocab), l)))
        .collect();
    let model = train(&data, vocab, &cfg).unwrap();
    let report = evaluate(&model, &test_set, &[Label::Positive]).unwrap();
    assert_eq!(report.test_kind, TestKind::Auto);
    assert!(report.f1.unwrap() >= 90.0, "{}", report.to_table());

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.txt");
    save_model(&model, &path).unwrap();
    let back = load_model(&path).unwrap();
    assert_eq!(evaluate(&back, &test_set, &[Label::Positive]).unwrap(), report);
}

#[test]
fn speculation_positives_surface_as_suspicion_false_negatives() {
    let synth = generate_synthetic_corpus(&SynthConfig::new(3000, 0.25, 0.1, 8)).unwrap();
    let lexicon = Lexicon::starter();
    let auto = weak(&synth.notes, &lexicon);
    let spec = SplitSpec::default();
    let (train_set, auto_test) = split(&auto, &spec).unwrap();
    let (_, truth_test) = split(&synth.notes, &spec).unwrap();

    let tk = lexicon.tokenizer();
    let tokenized: Vec<_> = train_set.iter().map(|n| tk.tokenize(&n.note)).collect();
    let vocab = build_vocabulary(&tokenized, DEFAULT_MIN_DF, DEFAULT_MAX_DF_RATIO).unwrap();
    let cfg = TrainConfig { possible_note_policy: PossiblePolicy::AsNegative, ..TrainConfig::default() };
    let data: Vec<_> = train_set
        .iter()
        .zip(&tokenized)
        .filter_map(|(n, t)| cfg.possible_note_policy.map(n.label).map(|l| (vectorize(t, &vocab), l)))
        .collect();
    let model = train(&data, vocab, &cfg).unwrap();

    let gold: Vec<LabeledNote> = truth_test
        .into_iter()
        .map(|n| LabeledNote { provenance: Provenance::GoldHuman, ..n })
        .collect();
    let gold_means = TestKind::Gold.default_positive_means();
    let auto_report = evaluate(&model, &auto_test, &[Label::Positive]).unwrap();
    let gold_report = evaluate(&model, &gold, &gold_means).unwrap();
    assert!(gold_report.recall.unwrap() < auto_report.recall.unwrap());
    let breakdown = error_breakdown(&model, &gold, &lexicon, &gold_means).unwrap();
    assert!(breakdown.fn_share(ErrorBucket::SuspicionOnly).unwrap() >= 0.9, "{:?}", breakdown.fn_buckets);
}
