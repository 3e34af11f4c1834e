use std::collections::{BTreeMap, HashSet};
use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Args;
use notewatch::assertion::{AssertedMention, Asserter};
use notewatch::classifier::{self, load_model, save_model, PossiblePolicy};
use notewatch::corpus::{
    generate_synthetic_corpus, load_corpus, load_labeled, single_provenance, split, write_labeled_jsonl,
    write_notes_jsonl, CorpusFormat, Label, LabeledNote, Note, NoteRecord, Provenance,
};
use notewatch::embeddings::{train_cbow_with_loss, EmbeddingTable};
use notewatch::eval::{self, TestKind};
use notewatch::features::{build_vocabulary, vectorize};
use notewatch::lexicon::{apply_reviews, propose_expansions, read_candidates, save_lexicon, write_candidates, Decision};
use notewatch::textnorm::Tokenizer;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::Failure;

fn io_failure(path: &Path, e: io::Error) -> Failure {
    Failure::new("io", format!("{}: {e}", path.display()))
}

fn format_of(path: &Path, explicit: Option<CorpusFormat>) -> CorpusFormat {
    explicit.unwrap_or_else(|| CorpusFormat::from_path(path))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut body = serde_json::to_string_pretty(value).expect("reports serialize");
    body.push('\n');
    fs::write(path, body).map_err(|e| io_failure(path, e))
}

fn label_counts<'a>(labels: impl Iterator<Item = &'a Label>) -> BTreeMap<&'static str, usize> {
    let mut counts = BTreeMap::new();
    for l in labels {
        *counts.entry(l.as_str()).or_default() += 1;
    }
    counts
}

#[derive(Args)]
pub struct IngestArgs {
    #[arg(long)]
    input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    format: Option<CorpusFormat>,
    #[arg(long)]
    output: PathBuf,
}

pub fn ingest(a: IngestArgs) -> Result<(), Failure> {
    let notes = load_corpus(&a.input, format_of(&a.input, a.format))?;
    write_notes_jsonl(&a.output, &notes)?;
    println!("ingested {} notes -> {}", notes.len(), a.output.display());
    Ok(())
}

#[derive(Args)]
pub struct GenSynthArgs {
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    size: Option<usize>,
    #[arg(long)]
    positive_rate: Option<f64>,
    #[arg(long)]
    speculated_rate: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the ids of notes carrying out-of-lexicon misspellings.
    #[arg(long)]
    oov_output: Option<PathBuf>,
}

pub fn gen_synth(a: GenSynthArgs, mut config: PipelineConfig) -> Result<(), Failure> {
    let s = &mut config.synth;
    s.size = a.size.unwrap_or(s.size);
    s.positive_rate = a.positive_rate.unwrap_or(s.positive_rate);
    s.speculated_rate = a.speculated_rate.unwrap_or(s.speculated_rate);
    s.seed = a.seed.unwrap_or(s.seed);
    config.validate()?;
    let corpus = generate_synthetic_corpus(&config.synth.to_config())?;
    write_labeled_jsonl(&a.output, &corpus.notes)?;
    if let Some(path) = &a.oov_output {
        let body: String = corpus.oov_injected.iter().map(|id| format!("{id}\n")).collect();
        fs::write(path, body).map_err(|e| io_failure(path, e))?;
    }
    println!(
        "generated {} notes {:?}, {} with out-of-lexicon misspellings -> {}",
        corpus.notes.len(),
        label_counts(corpus.notes.iter().map(|n| &n.label)),
        corpus.oov_injected.len(),
        a.output.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct TrainEmbeddingsArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    format: Option<CorpusFormat>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    min_count: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// More than 1 trains with unsynchronized workers (not reproducible).
    #[arg(long)]
    workers: Option<usize>,
}

pub fn train_embeddings(a: TrainEmbeddingsArgs, mut config: PipelineConfig) -> Result<(), Failure> {
    let e = &mut config.embeddings;
    e.dim = a.dim.unwrap_or(e.dim);
    e.window = a.window.unwrap_or(e.window);
    e.min_count = a.min_count.unwrap_or(e.min_count);
    e.epochs = a.epochs.unwrap_or(e.epochs);
    e.seed = a.seed.unwrap_or(e.seed);
    e.workers = a.workers.unwrap_or(e.workers);
    config.validate()?;
    let tokenizer = config.lexicon()?.tokenizer();
    let notes = load_corpus(&a.input, format_of(&a.input, a.format))?;
    let tokenized: Vec<_> = notes.iter().map(|n| tokenizer.tokenize(n)).collect();
    let (table, losses) = train_cbow_with_loss(&tokenized, &config.embeddings)?;
    table.write_tsv(&a.output)?;
    println!(
        "trained {} x {} embeddings, epoch losses {:?} -> {}",
        table.len(),
        table.dim(),
        losses.iter().map(|l| format!("{l:.4}")).collect::<Vec<_>>(),
        a.output.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct ExpandArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_cosine: Option<f64>,
}

pub fn expand_lexicon(a: ExpandArgs, mut config: PipelineConfig) -> Result<(), Failure> {
    let x = &mut config.expansion;
    x.target = a.target.unwrap_or(x.target.clone());
    x.k = a.k.unwrap_or(x.k);
    x.min_cosine = a.min_cosine.unwrap_or(x.min_cosine);
    config.validate()?;
    let lexicon = config.lexicon()?;
    let table = EmbeddingTable::read_tsv(&a.embeddings)?;
    let target = config.expansion_target()?;
    let (candidates, summary) =
        propose_expansions(&lexicon, &table, target, config.expansion.k, config.expansion.min_cosine)?;
    write_candidates(&a.output, &candidates)?;
    println!(
        "{} candidates for {} from {} seeds ({} not in vocabulary, {} multi-token) -> {}",
        candidates.len(),
        target.name(),
        summary.seeds_expanded,
        summary.seeds_out_of_vocabulary,
        summary.seeds_multi_token,
        a.output.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct ReviewArgs {
    /// Candidate TSV; its decision column is updated in place by `--interactive`.
    #[arg(long)]
    candidates: PathBuf,
    /// Directory for the extended lexicon.
    #[arg(long)]
    output_dir: PathBuf,
    #[arg(long)]
    target: Option<String>,
    /// Ask accept/reject for every PENDING candidate on stdin.
    #[arg(long)]
    interactive: bool,
}

pub fn review_lexicon(a: ReviewArgs, mut config: PipelineConfig) -> Result<(), Failure> {
    if let Some(t) = a.target {
        config.expansion.target = t;
    }
    config.validate()?;
    let target = config.expansion_target()?;
    let lexicon = config.lexicon()?;
    let mut candidates = read_candidates(&a.candidates, target)?;

    if a.interactive {
        let stdin = io::stdin();
        let mut lines = stdin.lock().lines();
        for c in candidates.iter_mut().filter(|c| c.decision == Decision::Pending) {
            eprint!("{} -> {} (cosine {:.3}) accept? [y/n/q] ", c.seed_term, c.candidate, c.cosine);
            let answer = match lines.next() {
                Some(line) => line.map_err(|e| Failure::new("io", format!("stdin: {e}")))?,
                None => break,
            };
            match answer.trim().to_ascii_lowercase().as_str() {
                "y" | "yes" | "a" => c.accept()?,
                "n" | "no" | "r" => c.reject()?,
                _ => break,
            }
        }
        write_candidates(&a.candidates, &candidates)?;
    }

    let extended = apply_reviews(&lexicon, &candidates)?;
    fs::create_dir_all(&a.output_dir).map_err(|e| io_failure(&a.output_dir, e))?;
    save_lexicon(&extended, &a.output_dir)?;
    let accepted = candidates.iter().filter(|c| c.decision == Decision::Accepted).count();
    println!(
        "{accepted} of {} candidates accepted; {} grew from {} to {} phrases -> {}",
        candidates.len(),
        target.name(),
        lexicon.set(target).len(),
        extended.set(target).len(),
        a.output_dir.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct WeakLabelArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    format: Option<CorpusFormat>,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    window: Option<usize>,
}

#[derive(Serialize)]
struct WeakRecord<'a> {
    #[serde(flatten)]
    record: NoteRecord,
    mentions: &'a [AssertedMention],
}

pub fn weak_label(a: WeakLabelArgs, mut config: PipelineConfig) -> Result<(), Failure> {
    config.assertion.window = a.window.unwrap_or(config.assertion.window);
    config.validate()?;
    let asserter = Asserter::new(&config.lexicon()?, config.assertion.window);
    let notes = load_corpus(&a.input, format_of(&a.input, a.format))?;
    let file = File::create(&a.output).map_err(|e| io_failure(&a.output, e))?;
    let mut out = BufWriter::new(file);
    let mut labels = Vec::with_capacity(notes.len());
    for note in &notes {
        let weak = asserter.label_note(note);
        let mut record = NoteRecord::from(note);
        record.label = Some(weak.label);
        record.provenance = Some(Provenance::WeakRule);
        let line = serde_json::to_string(&WeakRecord { record, mentions: &weak.mentions }).expect("records serialize");
        writeln!(out, "{line}").map_err(|e| io_failure(&a.output, e))?;
        labels.push(weak.label);
    }
    out.flush().map_err(|e| io_failure(&a.output, e))?;
    println!("weak-labeled {} notes {:?} -> {}", notes.len(), label_counts(labels.iter()), a.output.display());
    Ok(())
}

#[derive(Args)]
pub struct TrainArgs {
    /// Labeled notes (JSONL or CSV with label and provenance).
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    format: Option<CorpusFormat>,
    #[arg(long)]
    model: PathBuf,
    /// Where to write the held-out split as labeled JSONL.
    #[arg(long)]
    test_output: Option<PathBuf>,
    /// Train on every note instead of a train/test split.
    #[arg(long)]
    no_split: bool,
    #[arg(long)]
    train_fraction: Option<f64>,
    #[arg(long)]
    split_seed: Option<u64>,
    #[arg(long)]
    cost_c: Option<f64>,
    #[arg(long)]
    positive_class_weight: Option<f64>,
    #[arg(long)]
    possible_policy: Option<PossiblePolicy>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    min_df: Option<u32>,
    #[arg(long)]
    max_df_ratio: Option<f64>,
}

pub fn train(a: TrainArgs, mut config: PipelineConfig) -> Result<(), Failure> {
    let t = &mut config.train;
    t.cost_c = a.cost_c.unwrap_or(t.cost_c);
    t.positive_class_weight = a.positive_class_weight.unwrap_or(t.positive_class_weight);
    t.possible_note_policy = a.possible_policy.unwrap_or(t.possible_note_policy);
    t.seed = a.seed.unwrap_or(t.seed);
    config.split.train_fraction = a.train_fraction.unwrap_or(config.split.train_fraction);
    config.split.seed = a.split_seed.unwrap_or(config.split.seed);
    config.features.min_df = a.min_df.unwrap_or(config.features.min_df);
    config.features.max_df_ratio = a.max_df_ratio.unwrap_or(config.features.max_df_ratio);
    config.validate()?;

    let labeled = load_labeled(&a.input, format_of(&a.input, a.format))?;
    single_provenance(&labeled)?;
    let (train_set, test_set) = if a.no_split {
        (labeled, Vec::new())
    } else {
        split(&labeled, &config.split)?
    };
    if let Some(path) = &a.test_output {
        write_labeled_jsonl(path, &test_set)?;
    }

    let policy = config.train.possible_note_policy;
    let used: Vec<(&LabeledNote, Label)> = train_set
        .iter()
        .filter_map(|n| policy.map(n.label).map(|l| (n, l)))
        .collect();
    let tokenizer = Tokenizer::default();
    let tokenized: Vec<_> = used.iter().map(|(n, _)| tokenizer.tokenize(&n.note)).collect();
    let vocab = build_vocabulary(&tokenized, config.features.min_df, config.features.max_df_ratio)?;
    let data: Vec<_> = tokenized
        .iter()
        .zip(&used)
        .map(|(t, (_, l))| (vectorize(t, &vocab), *l))
        .collect();
    let model = classifier::train(&data, vocab, &config.train)?;
    save_model(&model, &a.model)?;
    let s = &model.training_summary;
    println!(
        "trained on {} notes ({} excluded by policy), vocabulary {} [{}], {} epochs, objective {:.6}, violation {:.2e} -> {}",
        data.len(),
        train_set.len() - data.len(),
        model.vocab.len(),
        model.vocab.fingerprint(),
        s.epochs_run,
        s.objective,
        s.final_violation,
        a.model.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    /// Labeled test notes; their provenance decides the report's test kind.
    #[arg(long)]
    test: PathBuf,
    #[arg(long)]
    format: Option<CorpusFormat>,
    /// Report JSON path.
    #[arg(long)]
    report: PathBuf,
    /// Labels counted as positive, comma separated. Default: POSITIVE, plus
    /// POSSIBLE on gold sets.
    #[arg(long, value_delimiter = ',')]
    positive_means: Option<Vec<Label>>,
    /// Also write the false negative/positive breakdown to this JSON file.
    #[arg(long)]
    breakdown: Option<PathBuf>,
}

pub fn evaluate(a: EvaluateArgs, config: PipelineConfig) -> Result<(), Failure> {
    config.validate()?;
    let model = load_model(&a.model)?;
    let test = load_labeled(&a.test, format_of(&a.test, a.format))?;
    let kind = single_provenance(&test)?.map_or(TestKind::Auto, TestKind::from);
    let positive_means = a.positive_means.unwrap_or_else(|| kind.default_positive_means());
    let report = eval::evaluate(&model, &test, &positive_means)?;
    write_json(&a.report, &report)?;
    if let Some(path) = &a.breakdown {
        let breakdown = eval::error_breakdown(&model, &test, &config.lexicon()?, &positive_means)?;
        write_json(path, &breakdown)?;
    }
    print!("{}", report.to_table());
    Ok(())
}

#[derive(Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    model: PathBuf,
    /// JSONL notes, read as a stream.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
    /// Refuse to run unless the model's vocabulary fingerprint equals this.
    #[arg(long)]
    expected_vocab_hash: Option<String>,
}

#[derive(Serialize)]
struct PredictionRecord<'a> {
    note_id: &'a str,
    label: Label,
    score: f64,
}

pub fn classify(a: ClassifyArgs, mut config: PipelineConfig) -> Result<(), Failure> {
    config.classify.workers = a.workers.unwrap_or(config.classify.workers);
    if a.expected_vocab_hash.is_some() {
        config.classify.expected_vocab_hash = a.expected_vocab_hash;
    }
    config.validate()?;
    let model = load_model(&a.model)?;
    let fingerprint = model.vocab.fingerprint();
    if let Some(expected) = &config.classify.expected_vocab_hash {
        if !expected.eq_ignore_ascii_case(&fingerprint) {
            return Err(Failure::new(
                "vocab_mismatch",
                format!("model vocabulary {fingerprint} does not match expected {expected}"),
            ));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.classify.workers)
        .build()
        .map_err(|e| Failure::new("internal", e.to_string()))?;
    let tokenizer = Tokenizer::default();

    let input = File::open(&a.input).map_err(|e| io_failure(&a.input, e))?;
    let output = File::create(&a.output).map_err(|e| io_failure(&a.output, e))?;
    let mut out = BufWriter::new(output);
    let mut seen = HashSet::new();
    let mut batch: Vec<Note> = Vec::with_capacity(config.classify.batch_size);
    let mut total = 0usize;

    let mut flush = |batch: &mut Vec<Note>, out: &mut BufWriter<File>| -> Result<(), Failure> {
        let predict = |n: &Note| model.predict(&vectorize(&tokenizer.tokenize(n), &model.vocab));
        let results: Vec<_> = if config.classify.workers > 1 {
            pool.install(|| batch.par_iter().map(predict).collect())
        } else {
            batch.iter().map(predict).collect()
        };
        for (note, result) in batch.iter().zip(results) {
            let p = result?;
            let rec = PredictionRecord { note_id: &note.note_id, label: p.label, score: p.score };
            let line = serde_json::to_string(&rec).expect("predictions serialize");
            writeln!(out, "{line}").map_err(|e| io_failure(&a.output, e))?;
        }
        total += batch.len();
        batch.clear();
        Ok(())
    };

    for (i, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| io_failure(&a.input, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |message: String| {
            Failure::from(notewatch::Error::MalformedRecord {
                path: a.input.clone(),
                line: i + 1,
                message,
            })
        };
        let record: NoteRecord = serde_json::from_str(&line).map_err(|e| malformed(e.to_string()))?;
        let note = record.into_note();
        note.validate().map_err(|e| malformed(e.to_string()))?;
        if !seen.insert(note.note_id.clone()) {
            return Err(notewatch::Error::DuplicateNoteId(note.note_id).into());
        }
        batch.push(note);
        if batch.len() == config.classify.batch_size {
            flush(&mut batch, &mut out)?;
        }
    }
    flush(&mut batch, &mut out)?;
    out.flush().map_err(|e| io_failure(&a.output, e))?;
    if total == 0 {
        return Err(notewatch::Error::EmptyCorpus(a.input.clone()).into());
    }
    println!("classified {total} notes -> {}", a.output.display());
    Ok(())
}
