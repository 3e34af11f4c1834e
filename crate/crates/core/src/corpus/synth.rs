//! Template-driven synthetic nursing notes with known labels.
//!
//! Each note is a handful of routine nursing sentences plus, depending on its
//! drawn label, one or two sentences about antibiotics: affirmed
//! administration for POSITIVE, hedged or pending administration for
//! POSSIBLE, and either nothing or a negated mention for NEGATIVE. Every
//! antibiotic surface form and trigger used here exists in the starter
//! lexicon, except the deliberate out-of-lexicon misspellings, whose note ids
//! are reported separately.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Label, LabeledNote, Note, Provenance};
use crate::lexicon::Lexicon;
use crate::textnorm::normalize_phrase;
use crate::{Error, Result};

/// Antibiotic groups: canonical spelling first, then in-lexicon variants.
pub(crate) const ANTIBIOTIC_GROUPS: &[&[&str]] = &[
    &["vancomycin", "vanco", "vancomicin", "Vancomycin"],
    &["levofloxacin", "levaquin", "Levaquin", "levoquin"],
    &["cefazolin", "ancef", "Ancef", "cefazolen"],
    &["ceftriaxone", "rocephin", "ceftriaxon"],
    &["cefepime", "maxipime", "cefepim"],
    &["piperacillin tazobactam", "zosyn", "Zosyn", "pip tazo"],
    &["meropenem", "merrem", "meropenum"],
    &["clindamycin", "clinda", "clindamyacin"],
    &["metronidazole", "flagyl", "Flagyl"],
    &["azithromycin", "azithro", "zithromax"],
    &["amoxicillin", "amox", "amoxacillin", "amoxycillin"],
    &["ciprofloxacin", "cipro", "Cipro"],
    &["doxycycline", "doxy"],
    &["linezolid", "zyvox"],
    &["daptomycin", "dapto"],
    &["bactrim", "tmp smx", "Bactrim"],
    &["penicillin", "pcn", "pen-G"],
    &["ampicillin", "unasyn"],
    &["gentamicin", "gentamycin"],
    &["nafcillin", "oxacillin"],
];

const CONDITIONS: &[&str] = &[
    "pneumonia", "pna", "pnuemonia", "UTI", "cellulitis", "LLL pneumonia", "MRSA bacteremia",
    "aspiration pneumonia", "c diff colitis", "wound infection", "line infection", "urosepsis",
    "osteomyelitis", "GNR bacteremia", "RLL infiltrate",
];

const AFFIRMED: &[&str] = &[
    "Started on {abx} for {cond}.",
    "Continues on {abx} iv.",
    "Medicated with iv {abx} dose 2 of 3.",
    "{abx} started for {cond}.",
    "Remains on {abx} and {abx2} for {cond}.",
    "Receiving {abx} q8h per ID recs.",
    "On {abx} day 4 for {cond}.",
    "Given {abx} as ordered, tolerated well.",
    "Now on {abx} for {cond}, trough due at 2200.",
];

const SPECULATED: &[&str] = &[
    "?{abx} pending cultures.",
    "Possible {abx} if cultures positive.",
    "Consider starting {abx} for ?{cond}.",
    "May start {abx} if febrile overnight.",
    "{abx} to be considered if wbc rises.",
    "Rule out {cond}, question of {abx} in am.",
    "Team to decide re {abx} pending sputum results.",
];

const NEGATED: &[&str] = &[
    "Allergic to {abx}.",
    "Allergy to {abx}, hives.",
    "No {abx} at this time.",
    "{abx} discontinued yesterday.",
    "{abx} held per MD.",
    "Denies taking {abx} at home.",
    "Anaphylaxis to {abx} noted in chart.",
];

const ROUTINE: &[&str] = &[
    "Pt alert and oriented x3, follows commands.",
    "Tolerating tube feeds at goal.",
    "HR 80s NSR, BP stable overnight.",
    "Family in to visit, updated by RN.",
    "Skin intact, turned q2h.",
    "Voiding via foley, clear yellow urine.",
    "Pain controlled with morphine prn.",
    "Ambulated in hallway with PT.",
    "K repleted per sliding scale.",
    "Lungs clear bilaterally, on 2L NC.",
    "Slept well between cares.",
    "Abd soft, nontender, +BS.",
    "Insulin drip titrated per protocol.",
    "PEG tube to gravity, episodes of vomitting on day shift.",
    "Social work following for dispo planning.",
    "Denies pain or nausea.",
    "Plan to extubate in am.",
];

const SYMPTOMS: &[&str] = &[
    "Pt had temp spike of 102.4.",
    "Elevated WBC count.",
    "Very large copious amount of secretions,sputum.",
    "Blood culture pos for gram neg organisms.",
    "UA positive for UTI.",
    "Lungs coarse, thick yellow secretions suctioned from ett.",
    "Tmax 101.8, bld cx sent.",
    "Wound with purulent drainage, redness at site.",
];

/// Generator parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub size: usize,
    pub positive_rate: f64,
    pub speculated_rate: f64,
    pub seed: u64,
    /// Probability that an antibiotic is written with an in-lexicon variant
    /// (brand, abbreviation, misspelling) instead of its canonical name.
    pub variant_rate: f64,
    /// Probability that a POSITIVE note's only affirmed antibiotic is written
    /// with a misspelling the lexicon does not know.
    pub oov_misspelling_rate: f64,
    /// Probability that a NEGATIVE note carries a negated antibiotic mention.
    pub negated_rate: f64,
}

impl SynthConfig {
    pub fn new(size: usize, positive_rate: f64, speculated_rate: f64, seed: u64) -> Self {
        SynthConfig {
            size,
            positive_rate,
            speculated_rate,
            seed,
            variant_rate: 0.3,
            oov_misspelling_rate: 0.01,
            negated_rate: 0.35,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.size == 0 {
            return Err(Error::InvalidArgument("synthetic corpus size must be > 0".into()));
        }
        let rates = [
            ("positive_rate", self.positive_rate),
            ("speculated_rate", self.speculated_rate),
            ("variant_rate", self.variant_rate),
            ("oov_misspelling_rate", self.oov_misspelling_rate),
            ("negated_rate", self.negated_rate),
        ];
        for (name, r) in rates {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!("{name} must lie in [0, 1], got {r}")));
            }
        }
        if self.positive_rate + self.speculated_rate > 1.0 + 1e-12 {
            return Err(Error::InvalidArgument(
                "positive_rate + speculated_rate must not exceed 1".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCorpus {
    pub notes: Vec<LabeledNote>,
    /// Ids of POSITIVE notes whose antibiotic was replaced by an
    /// out-of-lexicon misspelling.
    pub oov_injected: BTreeSet<String>,
}

/// Draws `round(size * rate)` notes per class, shuffled, with ground-truth
/// labels and provenance `SYNTH_TRUTH`.
pub fn generate_synthetic_corpus(config: &SynthConfig) -> Result<SyntheticCorpus> {
    config.validate()?;
    let lexicon = Lexicon::starter();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let n = config.size;
    let n_pos = ((n as f64 * config.positive_rate).round() as usize).min(n);
    let n_spec = ((n as f64 * config.speculated_rate).round() as usize).min(n - n_pos);
    let mut labels: Vec<Label> = std::iter::repeat_n(Label::Positive, n_pos)
        .chain(std::iter::repeat_n(Label::Possible, n_spec))
        .chain(std::iter::repeat_n(Label::Negative, n - n_pos - n_spec))
        .collect();
    labels.shuffle(&mut rng);

    let mut notes = Vec::with_capacity(n);
    let mut oov_injected = BTreeSet::new();
    for (i, label) in labels.into_iter().enumerate() {
        let note_id = format!("synth-{}-{i:06}", config.seed);
        let (text, oov) = compose(label, config, &lexicon, &mut rng);
        if oov {
            oov_injected.insert(note_id.clone());
        }
        notes.push(LabeledNote {
            note: Note {
                note_id,
                text,
                timestamp: None,
                patient_ref: Some(format!("synth-pt-{}", i / 4)),
            },
            label,
            provenance: Provenance::SynthTruth,
        });
    }
    Ok(SyntheticCorpus {
        notes,
        oov_injected,
    })
}

fn compose(label: Label, cfg: &SynthConfig, lexicon: &Lexicon, rng: &mut ChaCha8Rng) -> (String, bool) {
    let mut sentences: Vec<String> = (0..rng.random_range(2..=5))
        .map(|_| ROUTINE.choose(rng).unwrap().to_string())
        .collect();
    let symptom_rate = match label {
        Label::Positive | Label::Possible => 0.6,
        Label::Negative => 0.15,
    };
    if rng.random_bool(symptom_rate) {
        sentences.push(SYMPTOMS.choose(rng).unwrap().to_string());
    }

    let mut oov = false;
    let mut labelled = Vec::new();
    match label {
        Label::Positive => {
            if rng.random_bool(cfg.oov_misspelling_rate) {
                oov = true;
                let template = AFFIRMED
                    .iter()
                    .filter(|t| !t.contains("{abx2}"))
                    .collect::<Vec<_>>();
                let abx = misspell(rng, lexicon);
                labelled.push(fill(template.choose(rng).unwrap(), &abx, "", rng));
            } else {
                let t = AFFIRMED.choose(rng).unwrap();
                let a = antibiotic(cfg, rng);
                let b = antibiotic(cfg, rng);
                labelled.push(fill(t, &a, &b, rng));
                if rng.random_bool(0.1) {
                    let t = NEGATED.choose(rng).unwrap();
                    labelled.push(fill(t, &antibiotic(cfg, rng), "", rng));
                }
            }
        }
        Label::Possible => {
            let t = SPECULATED.choose(rng).unwrap();
            labelled.push(fill(t, &antibiotic(cfg, rng), "", rng));
            if rng.random_bool(0.1) {
                let t = NEGATED.choose(rng).unwrap();
                labelled.push(fill(t, &antibiotic(cfg, rng), "", rng));
            }
        }
        Label::Negative => {
            if rng.random_bool(cfg.negated_rate) {
                let t = NEGATED.choose(rng).unwrap();
                labelled.push(fill(t, &antibiotic(cfg, rng), "", rng));
            }
        }
    }
    for s in labelled {
        let at = rng.random_range(0..=sentences.len());
        sentences.insert(at, s);
    }

    let mut text = String::new();
    for (k, s) in sentences.iter().enumerate() {
        if k > 0 {
            text.push(if rng.random_bool(0.2) { '\n' } else { ' ' });
        }
        text.push_str(s);
    }
    (text, oov)
}

fn antibiotic(cfg: &SynthConfig, rng: &mut ChaCha8Rng) -> String {
    let group = ANTIBIOTIC_GROUPS.choose(rng).unwrap();
    if group.len() > 1 && rng.random_bool(cfg.variant_rate) {
        group[rng.random_range(1..group.len())].to_string()
    } else {
        group[0].to_string()
    }
}

fn misspell(rng: &mut ChaCha8Rng, lexicon: &Lexicon) -> String {
    loop {
        let group = ANTIBIOTIC_GROUPS.choose(rng).unwrap();
        let word: Vec<char> = group[0].chars().collect();
        if word.len() < 6 || word.contains(&' ') {
            continue;
        }
        let mut w = word.clone();
        let k = rng.random_range(1..w.len() - 2);
        match rng.random_range(0..3) {
            0 => w.swap(k, k + 1),
            1 => {
                w.remove(k);
            }
            _ => w.insert(k, w[k]),
        }
        let candidate: String = w.into_iter().collect();
        let norm = normalize_phrase(&candidate);
        if !lexicon.contains_anywhere(&norm) {
            return candidate;
        }
    }
}

fn fill(template: &str, abx: &str, abx2: &str, rng: &mut ChaCha8Rng) -> String {
    let cond = CONDITIONS.choose(rng).unwrap();
    let mut s = template.replace("{abx2}", abx2).replace("{cond}", cond);
    if s.starts_with("{abx}") {
        let mut chars = abx.chars();
        let cap: String = match chars.next() {
            Some(c) => c.to_uppercase().chain(chars).collect(),
            None => String::new(),
        };
        s = s.replacen("{abx}", &cap, 1);
    }
    s.replace("{abx}", abx)
}

/// Antibiotic name pairs that [`synonym_corpus`] plants as interchangeable.
pub const SYNONYM_PAIRS: [(&str, &str); 10] = [
    ("cefazolin", "ancef"),
    ("vancomycin", "vanco"),
    ("zosyn", "piptazo"),
    ("ceftriaxone", "rocephin"),
    ("metronidazole", "flagyl"),
    ("ciprofloxacin", "cipro"),
    ("levofloxacin", "levaquin"),
    ("clindamycin", "cleocin"),
    ("meropenem", "merrem"),
    ("bactrim", "smxtmp"),
];

const PAIR_CONTEXTS: [[&str; 4]; 10] = [
    ["cellulitis", "leg", "erythema", "incision"],
    ["mrsa", "trough", "picc", "bacteremia"],
    ["aspiration", "sputum", "ett", "infiltrate"],
    ["meningitis", "lp", "headache", "csf"],
    ["cdiff", "stool", "diarrhea", "abdomen"],
    ["uti", "urine", "foley", "dysuria"],
    ["pneumonia", "cxr", "cough", "lll"],
    ["abscess", "drainage", "wound", "packing"],
    ["sepsis", "lactate", "pressors", "hypotension"],
    ["pcp", "prophylaxis", "hiv", "cd4"],
];

const SHARED: [&str; 8] = ["pt", "given", "started", "dose", "today", "on", "for", "iv"];

/// One-line sentences in which the two members of every [`SYNONYM_PAIRS`]
/// entry appear in the same pair-specific contexts.
pub fn synonym_corpus(sentences_per_pair: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(sentences_per_pair * SYNONYM_PAIRS.len());
    for _ in 0..sentences_per_pair {
        for (pair, ctx) in SYNONYM_PAIRS.iter().zip(&PAIR_CONTEXTS) {
            let drug = if rng.random_bool(0.5) { pair.0 } else { pair.1 };
            let c: Vec<&str> = ctx.choose_multiple(&mut rng, 3).copied().collect();
            let s = SHARED.choose_multiple(&mut rng, 2).copied().collect::<Vec<_>>();
            out.push(format!("{} {} {drug} {} {} {}", c[0], s[0], c[1], s[1], c[2]));
        }
    }
    out.shuffle(&mut rng);
    out
}
