//! Normalization, tokenization and sentence/clause segmentation.
//!
//! Text is cut into chunks at whitespace, brackets and clause punctuation
//! (`,` `;` `:`). A chunk's normalized form is its lowercased alphanumeric
//! residue; chunks that normalize to nothing are dropped as tokens but still
//! contribute the boundaries and hedges they carry.
//!
//! Sentences end at a newline or after a chunk whose trailing punctuation
//! contains `.`, `!` or `?`. A period embedded between digits (`102.4`) never
//! ends a sentence, and neither does the period of a known abbreviation
//! (`pt.`, `h/o.`).

use serde::{Deserialize, Serialize};

use crate::corpus::Note;
use crate::matcher::PhraseMatcher;

/// Conjunctions that open a new clause when no lexicon supplies its own list.
pub const DEFAULT_CONJUNCTIONS: &[&str] = &["and", "but", "however"];

const ABBREVIATIONS: &[&str] = &[
    "pt.", "pts.", "dr.", "mr.", "mrs.", "ms.", "vs.", "e.g.", "i.e.", "approx.", "h/o.", "s/p.",
    "hx.", "yo.", "y.o.", "st.", "min.", "max.",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub norm: String,
    /// Byte offsets into the note text; `text[start..end] == surface`.
    pub char_span: (usize, usize),
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub tokens: Vec<Token>,
    /// Sorted token indices `b` (with `0 < b < tokens.len()`) such that a
    /// clause boundary lies between token `b - 1` and token `b`.
    pub clause_boundaries: Vec<usize>,
    /// Sorted token indices that carry a `?` hedge. A bare `?` is attached to
    /// the preceding token, or to the following one at sentence start.
    pub hedges: Vec<usize>,
}

impl Sentence {
    pub fn norms(&self) -> Vec<&str> {
        self.tokens.iter().map(|t| t.norm.as_str()).collect()
    }

    /// Clause ordinal of each token.
    pub fn clause_ids(&self) -> Vec<usize> {
        let mut ids = Vec::with_capacity(self.tokens.len());
        let mut clause = 0;
        let mut next = self.clause_boundaries.iter().peekable();
        for i in 0..self.tokens.len() {
            while next.peek().is_some_and(|&&b| b <= i) {
                clause += 1;
                next.next();
            }
            ids.push(clause);
        }
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedNote {
    pub note_id: String,
    pub sentences: Vec<Sentence>,
}

impl TokenizedNote {
    pub fn norms(&self) -> impl Iterator<Item = &str> {
        self.sentences
            .iter()
            .flat_map(|s| s.tokens.iter().map(|t| t.norm.as_str()))
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(|s| s.tokens.len()).sum()
    }
}

/// Lowercases `raw` and removes every character that is not a letter or digit.
pub fn normalize_token(raw: &str) -> String {
    raw.chars()
        .flat_map(char::to_lowercase)
        .filter(|c| c.is_alphanumeric())
        .collect()
}

/// Normalized tokens of a lexicon phrase, split with the same chunking rules
/// as note text.
pub fn phrase_tokens(raw: &str) -> Vec<String> {
    chunks(raw)
        .into_iter()
        .filter_map(|piece| match piece {
            Piece::Chunk(start, end) => Some(normalize_token(&raw[start..end])),
            _ => None,
        })
        .filter(|n| !n.is_empty())
        .collect()
}

/// Canonical single-space form of a phrase; empty if nothing survives.
pub fn normalize_phrase(raw: &str) -> String {
    phrase_tokens(raw).join(" ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Piece {
    Chunk(usize, usize),
    Clause,
    Newline,
}

fn is_bracket(c: char) -> bool {
    matches!(c, '(' | ')' | '[' | ']' | '{' | '}')
}

fn chunks(text: &str) -> Vec<Piece> {
    let mut pieces = Vec::new();
    let mut start: Option<usize> = None;
    let chars: Vec<(usize, char)> = text.char_indices().collect();

    let close = |pieces: &mut Vec<Piece>, start: &mut Option<usize>, at: usize| {
        if let Some(s) = start.take() {
            pieces.push(Piece::Chunk(s, at));
        }
    };

    for (k, &(at, c)) in chars.iter().enumerate() {
        let clause_punct = match c {
            ';' => true,
            ',' | ':' => {
                let before = k > 0 && chars[k - 1].1.is_ascii_digit();
                let after = chars.get(k + 1).is_some_and(|&(_, n)| n.is_ascii_digit());
                !(before && after)
            }
            _ => false,
        };
        if c.is_whitespace() {
            close(&mut pieces, &mut start, at);
            if c == '\n' {
                pieces.push(Piece::Newline);
            }
        } else if is_bracket(c) {
            close(&mut pieces, &mut start, at);
        } else if clause_punct {
            close(&mut pieces, &mut start, at);
            pieces.push(Piece::Clause);
        } else if start.is_none() {
            start = Some(at);
        }
    }
    close(&mut pieces, &mut start, text.len());
    pieces
}

fn ends_sentence(surface: &str) -> bool {
    let tail = match surface.char_indices().rev().find(|(_, c)| c.is_alphanumeric()) {
        Some((i, c)) => &surface[i + c.len_utf8()..],
        None => surface,
    };
    if tail.contains(['!', '?']) {
        return true;
    }
    if !tail.contains('.') {
        return false;
    }
    let lowered = surface
        .trim_start_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase();
    !ABBREVIATIONS.contains(&lowered.as_str())
}

#[derive(Debug, Clone)]
pub struct Tokenizer {
    conjunctions: PhraseMatcher<()>,
}

impl Default for Tokenizer {
    fn default() -> Self {
        Tokenizer::new(DEFAULT_CONJUNCTIONS)
    }
}

impl Tokenizer {
    /// Conjunction phrases are normalized with [`phrase_tokens`].
    pub fn new<I, S>(conjunctions: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut matcher = PhraseMatcher::new();
        for phrase in conjunctions {
            matcher.insert(&phrase_tokens(phrase.as_ref()), ());
        }
        Tokenizer {
            conjunctions: matcher,
        }
    }

    pub fn tokenize(&self, note: &Note) -> TokenizedNote {
        self.tokenize_text(&note.note_id, &note.text)
    }

    pub fn tokenize_text(&self, note_id: &str, text: &str) -> TokenizedNote {
        let mut sentences = Vec::new();
        let mut current = Sentence::default();
        let mut pending_boundary = false;
        let mut pending_hedge = false;

        for piece in chunks(text) {
            match piece {
                Piece::Newline => {
                    self.finish(&mut current, &mut sentences);
                    pending_boundary = false;
                    pending_hedge = false;
                }
                Piece::Clause => pending_boundary = !current.tokens.is_empty(),
                Piece::Chunk(start, end) => {
                    let surface = &text[start..end];
                    let norm = normalize_token(surface);
                    let hedge = surface.contains('?');
                    if norm.is_empty() {
                        if hedge {
                            match current.tokens.len() {
                                0 => pending_hedge = true,
                                n => current.hedges.push(n - 1),
                            }
                        }
                    } else {
                        let index = current.tokens.len();
                        if pending_boundary {
                            current.clause_boundaries.push(index);
                            pending_boundary = false;
                        }
                        if hedge || pending_hedge {
                            current.hedges.push(index);
                            pending_hedge = false;
                        }
                        current.tokens.push(Token {
                            surface: surface.to_owned(),
                            norm,
                            char_span: (start, end),
                        });
                    }
                    if ends_sentence(surface) {
                        self.finish(&mut current, &mut sentences);
                        pending_boundary = false;
                        pending_hedge = false;
                    }
                }
            }
        }
        self.finish(&mut current, &mut sentences);

        TokenizedNote {
            note_id: note_id.to_owned(),
            sentences,
        }
    }

    fn finish(&self, current: &mut Sentence, sentences: &mut Vec<Sentence>) {
        let mut sentence = std::mem::take(current);
        if sentence.tokens.is_empty() {
            return;
        }
        let n = sentence.tokens.len();
        let norms = sentence.norms();
        let conj: Vec<(usize, usize)> = self
            .conjunctions
            .find_iter(&norms)
            .iter()
            .map(|m| (m.start, m.end))
            .collect();
        for (s, e) in conj {
            sentence.clause_boundaries.extend([s, e]);
        }
        sentence.clause_boundaries.retain(|&b| b > 0 && b < n);
        sentence.clause_boundaries.sort_unstable();
        sentence.clause_boundaries.dedup();
        sentence.hedges.sort_unstable();
        sentence.hedges.dedup();
        sentences.push(sentence);
    }
}

/// Tokenizes with the default conjunction list.
pub fn tokenize(note: &Note) -> TokenizedNote {
    Tokenizer::default().tokenize(note)
}
