use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Label, LabeledNote, Note, Provenance};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Csv,
}

impl CorpusFormat {
    /// Guesses from the file extension; anything but `.csv` is JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => CorpusFormat::Csv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "csv" => Ok(CorpusFormat::Csv),
            other => Err(Error::InvalidArgument(format!("unknown corpus format {other:?}"))),
        }
    }
}

/// The on-disk note record shared by JSONL and CSV. Unknown JSON keys are ignored.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NoteRecord {
    pub note_id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patient_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

impl NoteRecord {
    pub fn into_note(self) -> Note {
        Note {
            note_id: self.note_id,
            text: self.text,
            timestamp: self.timestamp,
            patient_ref: self.patient_ref,
        }
    }
}

impl From<&LabeledNote> for NoteRecord {
    fn from(l: &LabeledNote) -> Self {
        NoteRecord {
            note_id: l.note.note_id.clone(),
            text: l.note.text.clone(),
            timestamp: l.note.timestamp.clone(),
            patient_ref: l.note.patient_ref.clone(),
            label: Some(l.label),
            provenance: Some(l.provenance),
        }
    }
}

impl From<&Note> for NoteRecord {
    fn from(n: &Note) -> Self {
        NoteRecord {
            note_id: n.note_id.clone(),
            text: n.text.clone(),
            timestamp: n.timestamp.clone(),
            patient_ref: n.patient_ref.clone(),
            label: None,
            provenance: None,
        }
    }
}

/// Reads every record with its 1-based line number, validating note
/// invariants and id uniqueness.
pub fn read_records(path: &Path, format: CorpusFormat) -> Result<Vec<(usize, NoteRecord)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let records = match format {
        CorpusFormat::Jsonl => read_jsonl(path, BufReader::new(file))?,
        CorpusFormat::Csv => read_csv(path, file)?,
    };
    if records.is_empty() {
        return Err(Error::EmptyCorpus(path.to_owned()));
    }

    let mut seen = HashSet::with_capacity(records.len());
    for (line, rec) in &records {
        let malformed = |message: String| Error::MalformedRecord {
            path: path.to_owned(),
            line: *line,
            message,
        };
        if rec.note_id.is_empty() {
            return Err(malformed("note_id is empty".into()));
        }
        if rec.text.trim().is_empty() {
            return Err(malformed(format!("note {:?} has empty text", rec.note_id)));
        }
        if !seen.insert(rec.note_id.as_str()) {
            return Err(Error::DuplicateNoteId(rec.note_id.clone()));
        }
    }
    Ok(records)
}

fn read_jsonl(path: &Path, reader: impl BufRead) -> Result<Vec<(usize, NoteRecord)>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: NoteRecord = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, rec));
    }
    Ok(out)
}

fn read_csv(path: &Path, file: File) -> Result<Vec<(usize, NoteRecord)>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let mut out = Vec::new();
    for row in reader.deserialize::<NoteRecord>() {
        let rec = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::MalformedRecord {
                path: path.to_owned(),
                line,
                message: e.to_string(),
            }
        })?;
        // header is line 1
        out.push((out.len() + 2, rec));
    }
    Ok(out)
}

/// Loads notes in file order; labels, if present, are ignored.
pub fn load_corpus(path: &Path, format: CorpusFormat) -> Result<Vec<Note>> {
    Ok(read_records(path, format)?
        .into_iter()
        .map(|(_, r)| r.into_note())
        .collect())
}

/// Loads notes that must all carry a label and a provenance.
pub fn load_labeled(path: &Path, format: CorpusFormat) -> Result<Vec<LabeledNote>> {
    read_records(path, format)?
        .into_iter()
        .map(|(line, rec)| {
            let missing = |field: &str| Error::MalformedRecord {
                path: path.to_owned(),
                line,
                message: format!("missing field `{field}`"),
            };
            let label = rec.label.ok_or_else(|| missing("label"))?;
            let provenance = rec.provenance.ok_or_else(|| missing("provenance"))?;
            Ok(LabeledNote {
                note: rec.into_note(),
                label,
                provenance,
            })
        })
        .collect()
}

pub fn write_records_jsonl<'a, I>(path: &Path, records: I) -> Result<()>
where
    I: IntoIterator<Item = &'a NoteRecord>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        let line = serde_json::to_string(rec).expect("note records always serialize");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_notes_jsonl(path: &Path, notes: &[Note]) -> Result<()> {
    let records: Vec<NoteRecord> = notes.iter().map(NoteRecord::from).collect();
    write_records_jsonl(path, &records)
}

pub fn write_labeled_jsonl(path: &Path, notes: &[LabeledNote]) -> Result<()> {
    let records: Vec<NoteRecord> = notes.iter().map(NoteRecord::from).collect();
    write_records_jsonl(path, &records)
}
