//! Note collections: loading, persistence, splitting and synthesis.

mod io;
mod split;
mod synth;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use io::{
    load_corpus, load_labeled, read_records, write_labeled_jsonl, write_notes_jsonl, write_records_jsonl,
    CorpusFormat, NoteRecord,
};
pub use split::{split, SplitSpec};
pub use synth::{generate_synthetic_corpus, synonym_corpus, SynthConfig, SyntheticCorpus, SYNONYM_PAIRS};

/// One free-text clinical note.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Note {
    pub note_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient_ref: Option<String>,
}

impl Note {
    pub fn new(note_id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let note = Note {
            note_id: note_id.into(),
            text: text.into(),
            timestamp: None,
            patient_ref: None,
        };
        note.validate()?;
        Ok(note)
    }

    pub fn validate(&self) -> Result<()> {
        if self.note_id.is_empty() {
            return Err(Error::InvalidNote("note_id is empty".into()));
        }
        if self.text.trim().is_empty() {
            return Err(Error::InvalidNote(format!(
                "note {:?} has empty text",
                self.note_id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Label {
    Positive,
    Possible,
    Negative,
}

impl Label {
    pub const ALL: [Label; 3] = [Label::Positive, Label::Possible, Label::Negative];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Positive => "POSITIVE",
            Label::Possible => "POSSIBLE",
            Label::Negative => "NEGATIVE",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "POSITIVE" => Ok(Label::Positive),
            "POSSIBLE" => Ok(Label::Possible),
            "NEGATIVE" => Ok(Label::Negative),
            other => Err(Error::InvalidArgument(format!("unknown label {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Provenance {
    WeakRule,
    GoldHuman,
    SynthTruth,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::WeakRule => "WEAK_RULE",
            Provenance::GoldHuman => "GOLD_HUMAN",
            Provenance::SynthTruth => "SYNTH_TRUTH",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledNote {
    pub note: Note,
    pub label: Label,
    pub provenance: Provenance,
}

/// The provenance shared by every note, or an error if sources are mixed.
pub fn single_provenance(notes: &[LabeledNote]) -> Result<Option<Provenance>> {
    let mut found: Option<Provenance> = None;
    for n in notes {
        match found {
            None => found = Some(n.provenance),
            Some(p) if p != n.provenance => {
                return Err(Error::InvalidArgument(format!(
                    "labels from {p} and {} mixed in one set (note {:?})",
                    n.provenance, n.note.note_id
                )))
            }
            _ => {}
        }
    }
    Ok(found)
}
