//! Antibiotic dictionary and trigger lists, plus the embedding-driven
//! expansion and review workflow.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::embeddings::EmbeddingTable;
use crate::textnorm::{phrase_tokens, Tokenizer};
use crate::{Error, Result};

/// Longest antibiotic phrase, in tokens.
pub const MAX_TERM_TOKENS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexiconSet {
    Antibiotics,
    PreNegation,
    PostNegation,
    PreSpeculation,
    PostSpeculation,
    Conjunctions,
}

impl LexiconSet {
    pub const ALL: [LexiconSet; 6] = [
        LexiconSet::Antibiotics,
        LexiconSet::PreNegation,
        LexiconSet::PostNegation,
        LexiconSet::PreSpeculation,
        LexiconSet::PostSpeculation,
        LexiconSet::Conjunctions,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LexiconSet::Antibiotics => "antibiotics",
            LexiconSet::PreNegation => "pre_negation",
            LexiconSet::PostNegation => "post_negation",
            LexiconSet::PreSpeculation => "pre_speculation",
            LexiconSet::PostSpeculation => "post_speculation",
            LexiconSet::Conjunctions => "conjunctions",
        }
    }

    pub fn file_name(self) -> String {
        format!("{}.txt", self.name())
    }
}

impl fmt::Display for LexiconSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LexiconSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().trim_end_matches(".txt").replace('-', "_");
        LexiconSet::ALL
            .into_iter()
            .find(|set| set.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown lexicon set {s:?}")))
    }
}

/// All phrase lists, each stored as normalized single-space phrases.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Lexicon {
    pub antibiotic_terms: BTreeSet<String>,
    pub pre_negation_triggers: BTreeSet<String>,
    pub post_negation_triggers: BTreeSet<String>,
    pub pre_speculation_triggers: BTreeSet<String>,
    pub post_speculation_triggers: BTreeSet<String>,
    pub conjunctions: BTreeSet<String>,
}

const STARTER: [(LexiconSet, &str); 6] = [
    (LexiconSet::Antibiotics, include_str!("../lexicon/antibiotics.txt")),
    (LexiconSet::PreNegation, include_str!("../lexicon/pre_negation.txt")),
    (LexiconSet::PostNegation, include_str!("../lexicon/post_negation.txt")),
    (LexiconSet::PreSpeculation, include_str!("../lexicon/pre_speculation.txt")),
    (LexiconSet::PostSpeculation, include_str!("../lexicon/post_speculation.txt")),
    (LexiconSet::Conjunctions, include_str!("../lexicon/conjunctions.txt")),
];

impl Lexicon {
    /// The lexicon shipped with the crate (`crates/core/lexicon/`).
    pub fn starter() -> Self {
        let mut lex = Lexicon::default();
        for (set, body) in STARTER {
            parse_list(Path::new(&set.file_name()), set, body, &mut lex)
                .expect("starter lexicon parses");
        }
        lex.validate().expect("starter lexicon is consistent");
        lex
    }

    pub fn set(&self, which: LexiconSet) -> &BTreeSet<String> {
        match which {
            LexiconSet::Antibiotics => &self.antibiotic_terms,
            LexiconSet::PreNegation => &self.pre_negation_triggers,
            LexiconSet::PostNegation => &self.post_negation_triggers,
            LexiconSet::PreSpeculation => &self.pre_speculation_triggers,
            LexiconSet::PostSpeculation => &self.post_speculation_triggers,
            LexiconSet::Conjunctions => &self.conjunctions,
        }
    }

    pub fn set_mut(&mut self, which: LexiconSet) -> &mut BTreeSet<String> {
        match which {
            LexiconSet::Antibiotics => &mut self.antibiotic_terms,
            LexiconSet::PreNegation => &mut self.pre_negation_triggers,
            LexiconSet::PostNegation => &mut self.post_negation_triggers,
            LexiconSet::PreSpeculation => &mut self.pre_speculation_triggers,
            LexiconSet::PostSpeculation => &mut self.post_speculation_triggers,
            LexiconSet::Conjunctions => &mut self.conjunctions,
        }
    }

    /// Whether a normalized phrase is in any of the six lists.
    pub fn contains_anywhere(&self, phrase: &str) -> bool {
        LexiconSet::ALL.iter().any(|&s| self.set(s).contains(phrase))
    }

    /// Normalizes and inserts a phrase; returns whether it was new.
    pub fn insert(&mut self, which: LexiconSet, raw: &str) -> Result<bool> {
        let phrase = checked_phrase(which, raw).map_err(|reason| Error::InvalidPhrase {
            path: which.file_name().into(),
            line: 0,
            phrase: raw.to_owned(),
            reason,
        })?;
        Ok(self.set_mut(which).insert(phrase))
    }

    /// Checks that antibiotic terms are disjoint from every other list.
    pub fn validate(&self) -> Result<()> {
        let mut overlap: BTreeSet<&str> = BTreeSet::new();
        for set in &LexiconSet::ALL[1..] {
            overlap.extend(
                self.antibiotic_terms
                    .intersection(self.set(*set))
                    .map(String::as_str),
            );
        }
        if overlap.is_empty() {
            Ok(())
        } else {
            Err(Error::LexiconOverlap(overlap.into_iter().map(str::to_owned).collect()))
        }
    }

    /// Tokenizer whose clause boundaries use this lexicon's conjunctions.
    pub fn tokenizer(&self) -> Tokenizer {
        Tokenizer::new(&self.conjunctions)
    }

    pub fn total_phrases(&self) -> usize {
        LexiconSet::ALL.iter().map(|&s| self.set(s).len()).sum()
    }
}

fn checked_phrase(which: LexiconSet, raw: &str) -> std::result::Result<String, String> {
    let tokens = phrase_tokens(raw);
    if tokens.is_empty() {
        return Err("normalizes to an empty phrase".into());
    }
    if which == LexiconSet::Antibiotics && tokens.len() > MAX_TERM_TOKENS {
        return Err(format!(
            "antibiotic phrases are limited to {MAX_TERM_TOKENS} tokens"
        ));
    }
    Ok(tokens.join(" "))
}

fn parse_list(path: &Path, which: LexiconSet, body: &str, lex: &mut Lexicon) -> Result<()> {
    for (i, line) in body.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let phrase = checked_phrase(which, trimmed).map_err(|reason| Error::InvalidPhrase {
            path: path.to_owned(),
            line: i + 1,
            phrase: trimmed.to_owned(),
            reason,
        })?;
        lex.set_mut(which).insert(phrase);
    }
    Ok(())
}

/// Reads the six list files from `dir`.
pub fn load_lexicon(dir: &Path) -> Result<Lexicon> {
    let mut lex = Lexicon::default();
    for set in LexiconSet::ALL {
        let path = dir.join(set.file_name());
        if !path.is_file() {
            return Err(Error::MissingListFile(path));
        }
        let body = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        parse_list(&path, set, &body, &mut lex)?;
    }
    lex.validate()?;
    Ok(lex)
}

/// Writes the six list files into `dir`, creating it if needed.
pub fn save_lexicon(lexicon: &Lexicon, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for set in LexiconSet::ALL {
        let path = dir.join(set.file_name());
        let mut body = format!("# {} ({} phrases)\n", set.name(), lexicon.set(set).len());
        for phrase in lexicon.set(set) {
            body.push_str(phrase);
            body.push('\n');
        }
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Decision {
    Pending,
    Accepted,
    Rejected,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::Pending => "PENDING",
            Decision::Accepted => "ACCEPTED",
            Decision::Rejected => "REJECTED",
        }
    }
}

impl FromStr for Decision {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "PENDING" => Ok(Decision::Pending),
            "ACCEPTED" => Ok(Decision::Accepted),
            "REJECTED" => Ok(Decision::Rejected),
            other => Err(Error::InvalidArgument(format!("unknown decision {other:?}"))),
        }
    }
}

/// A proposed lexicon addition awaiting manual review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCandidate {
    pub target: LexiconSet,
    pub seed_term: String,
    pub candidate: String,
    pub cosine: f64,
    pub decision: Decision,
}

impl ExpansionCandidate {
    pub fn accept(&mut self) -> Result<()> {
        self.decide(Decision::Accepted)
    }

    pub fn reject(&mut self) -> Result<()> {
        self.decide(Decision::Rejected)
    }

    fn decide(&mut self, to: Decision) -> Result<()> {
        if self.decision != Decision::Pending {
            return Err(Error::DecisionAlreadyMade {
                candidate: self.candidate.clone(),
                decision: self.decision.as_str().into(),
            });
        }
        self.decision = to;
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ExpansionSummary {
    pub seeds_expanded: usize,
    pub seeds_out_of_vocabulary: usize,
    pub seeds_multi_token: usize,
}

/// Nearest-neighbour candidates for every single-token seed of `target`.
///
/// Candidates already present in any list are dropped; a candidate reached
/// from several seeds keeps its highest cosine. Output is sorted by cosine,
/// descending, then by candidate.
pub fn propose_expansions(
    lexicon: &Lexicon,
    table: &EmbeddingTable,
    target: LexiconSet,
    k: usize,
    min_cosine: f64,
) -> Result<(Vec<ExpansionCandidate>, ExpansionSummary)> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    let mut summary = ExpansionSummary::default();
    let mut best: BTreeMap<String, (String, f64)> = BTreeMap::new();

    for seed in lexicon.set(target) {
        if seed.contains(' ') {
            summary.seeds_multi_token += 1;
            continue;
        }
        if !table.contains(seed) {
            summary.seeds_out_of_vocabulary += 1;
            continue;
        }
        summary.seeds_expanded += 1;
        for (candidate, cos) in table.nearest(seed, k)? {
            if cos < min_cosine || lexicon.contains_anywhere(&candidate) {
                continue;
            }
            match best.get(&candidate) {
                Some((_, prev)) if *prev >= cos => {}
                _ => {
                    best.insert(candidate, (seed.clone(), cos));
                }
            }
        }
    }

    let mut out: Vec<ExpansionCandidate> = best
        .into_iter()
        .map(|(candidate, (seed_term, cosine))| ExpansionCandidate {
            target,
            seed_term,
            candidate,
            cosine,
            decision: Decision::Pending,
        })
        .collect();
    out.sort_by(|a, b| b.cosine.total_cmp(&a.cosine).then_with(|| a.candidate.cmp(&b.candidate)));
    Ok((out, summary))
}

/// Returns a new lexicon with every ACCEPTED candidate added to its target list.
pub fn apply_reviews(lexicon: &Lexicon, candidates: &[ExpansionCandidate]) -> Result<Lexicon> {
    if let Some(c) = candidates.iter().find(|c| c.decision == Decision::Pending) {
        return Err(Error::PendingCandidate(c.candidate.clone()));
    }
    let mut out = lexicon.clone();
    for c in candidates.iter().filter(|c| c.decision == Decision::Accepted) {
        out.insert(c.target, &c.candidate)?;
    }
    out.validate()?;
    Ok(out)
}

pub const CANDIDATE_HEADER: &str = "seed\tcandidate\tcosine\tdecision";

pub fn write_candidates(path: &Path, candidates: &[ExpansionCandidate]) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut body = String::from(CANDIDATE_HEADER);
    body.push('\n');
    for c in candidates {
        body.push_str(&format!(
            "{}\t{}\t{:.6}\t{}\n",
            c.seed_term,
            c.candidate,
            c.cosine,
            c.decision.as_str()
        ));
    }
    file.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))
}

/// Reads a reviewed candidate TSV; all rows are attributed to `target`.
pub fn read_candidates(path: &Path, target: LexiconSet) -> Result<Vec<ExpansionCandidate>> {
    let body = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = body.lines().enumerate();
    let bad = |line: usize, message: String| Error::MalformedRecord {
        path: path.to_owned(),
        line,
        message,
    };
    match lines.next() {
        Some((_, h)) if h.trim_end() == CANDIDATE_HEADER => {}
        _ => return Err(bad(1, format!("expected header {CANDIDATE_HEADER:?}"))),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(bad(i + 1, format!("expected 4 columns, found {}", cols.len())));
        }
        let cosine: f64 = cols[2]
            .trim()
            .parse()
            .map_err(|_| bad(i + 1, format!("cosine {:?} is not a number", cols[2])))?;
        let decision = cols[3].parse().map_err(|e: Error| bad(i + 1, e.to_string()))?;
        out.push(ExpansionCandidate {
            target,
            seed_term: cols[0].trim().to_owned(),
            candidate: cols[1].trim().to_owned(),
            cosine,
            decision,
        });
    }
    Ok(out)
}
