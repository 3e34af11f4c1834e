use notewatch::corpus::Label;
use notewatch_web::{assert_text, run_experiment, score_text, ExperimentParams};

#[test]
fn segments_cover_the_text() {
    let text = "Pt denies taking cipro. Started vancomycin 1g IV q12h; ?zosyn";
    let a = assert_text(text, 5).unwrap();
    let joined: String = a.segments.iter().map(|s| s.text.as_str()).collect();
    assert_eq!(joined, text);
    let kinds: Vec<(&str, &str)> = a
        .segments
        .iter()
        .filter(|s| s.kind != "plain")
        .map(|s| (s.text.as_str(), s.kind))
        .collect();
    assert!(kinds.contains(&("denies", "trigger")));
    assert!(kinds.contains(&("cipro", "negated")));
    assert!(kinds.contains(&("vancomycin", "affirmed")));
    assert!(kinds.contains(&("zosyn", "speculated")));
    assert_eq!(a.label, Label::Positive);
}

#[test]
fn multibyte_text_keeps_boundaries() {
    let text = "naïve pt, no cipro café ½";
    let a = assert_text(text, 5).unwrap();
    assert_eq!(a.segments.iter().map(|s| s.text.as_str()).collect::<String>(), text);
    assert_eq!(a.label, Label::Negative);
}

#[test]
fn experiment_trains_a_usable_model() {
    let params = ExperimentParams { size: 600, ..ExperimentParams::default() };
    let (result, model) = run_experiment(&params).unwrap();
    assert_eq!(result.truth_counts.values().sum::<usize>(), 600);
    assert!(result.auto.f1.unwrap() > 80.0);
    assert_eq!(result.top_positive.len(), 10);
    let s = score_text(&model, "started vancomycin today").unwrap();
    assert!(s.known_tokens > 0);
    assert_eq!(run_experiment(&params).unwrap().1.weights, model.weights);
}

#[test]
fn empty_text_is_rejected() {
    assert!(assert_text("   ", 5).is_err());
}

#[test]
fn page_parameters_deserialize() {
    let p: ExperimentParams = serde_json::from_str(
        r#"{"size":300,"seed":3,"cost_c":1.5,"possible_policy":"EXCLUDE"}"#,
    )
    .unwrap();
    assert_eq!(p.size, 300);
    assert_eq!(p.possible_policy, notewatch::classifier::PossiblePolicy::Exclude);
    assert_eq!(p.positive_rate, ExperimentParams::default().positive_rate);
}
