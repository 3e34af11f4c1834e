//! Antibiotic mention detection with negation and speculation scoping.
//!
//! Within a sentence, antibiotic terms and trigger phrases are matched in a
//! single leftmost-longest pass over normalized tokens. A pre-trigger governs
//! the tokens after it and a post-trigger the tokens before it; a scope stops
//! at the sentence end, at a clause boundary, at another trigger, or after
//! `window` tokens. Negation outranks speculation. A `?` hedge anywhere in a
//! mention's clause makes it speculated.

use serde::{Deserialize, Serialize};

use crate::corpus::{Label, Note};
use crate::lexicon::{Lexicon, LexiconSet};
use crate::matcher::PhraseMatcher;
use crate::textnorm::{Sentence, TokenizedNote, Tokenizer};

/// NegEx-style default scope length, in tokens.
pub const DEFAULT_WINDOW: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum MentionStatus {
    Affirmed,
    Negated,
    Speculated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriggerKind {
    PreNegation,
    PostNegation,
    PreSpeculation,
    PostSpeculation,
    /// A literal `?` in the mention's clause.
    Hedge,
}

impl TriggerKind {
    fn is_negation(self) -> bool {
        matches!(self, TriggerKind::PreNegation | TriggerKind::PostNegation)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trigger {
    pub phrase: String,
    pub kind: TriggerKind,
    /// Token span of the trigger within the mention's sentence.
    pub position: (usize, usize),
}

/// A lexicon match before assertion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub phrase: String,
    pub sentence_index: usize,
    pub token_span: (usize, usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssertedMention {
    pub phrase: String,
    pub sentence_index: usize,
    pub token_span: (usize, usize),
    pub status: MentionStatus,
    /// The trigger that decided the status; absent exactly when affirmed.
    pub trigger: Option<Trigger>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeakLabel {
    pub label: Label,
    pub mentions: Vec<AssertedMention>,
}

impl WeakLabel {
    pub fn from_mentions(mentions: Vec<AssertedMention>) -> Self {
        let has = |s| mentions.iter().any(|m| m.status == s);
        let label = if has(MentionStatus::Affirmed) {
            Label::Positive
        } else if has(MentionStatus::Speculated) {
            Label::Possible
        } else {
            Label::Negative
        };
        WeakLabel { label, mentions }
    }
}

const ANTIBIOTIC: u8 = 1;
const PRE_NEG: u8 = 2;
const POST_NEG: u8 = 4;
const PRE_SPEC: u8 = 8;
const POST_SPEC: u8 = 16;
const TRIGGER_ROLES: [(u8, TriggerKind); 4] = [
    (PRE_NEG, TriggerKind::PreNegation),
    (POST_NEG, TriggerKind::PostNegation),
    (PRE_SPEC, TriggerKind::PreSpeculation),
    (POST_SPEC, TriggerKind::PostSpeculation),
];

/// A compiled lexicon: tokenizer plus one phrase trie holding every
/// antibiotic term and trigger with its roles.
#[derive(Debug, Clone)]
pub struct Asserter {
    tokenizer: Tokenizer,
    phrases: PhraseMatcher<u8>,
    window: usize,
}

struct Hit {
    start: usize,
    end: usize,
    roles: u8,
}

impl Asserter {
    pub fn new(lexicon: &Lexicon, window: usize) -> Self {
        let mut phrases = PhraseMatcher::new();
        let sets = [
            (LexiconSet::Antibiotics, ANTIBIOTIC),
            (LexiconSet::PreNegation, PRE_NEG),
            (LexiconSet::PostNegation, POST_NEG),
            (LexiconSet::PreSpeculation, PRE_SPEC),
            (LexiconSet::PostSpeculation, POST_SPEC),
        ];
        for (set, role) in sets {
            for phrase in lexicon.set(set) {
                let tokens: Vec<&str> = phrase.split(' ').collect();
                if let Some(slot) = phrases.slot(&tokens) {
                    *slot |= role;
                }
            }
        }
        Asserter {
            tokenizer: lexicon.tokenizer(),
            phrases,
            window,
        }
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn tokenizer(&self) -> &Tokenizer {
        &self.tokenizer
    }

    fn scan(&self, sentence: &Sentence) -> Vec<Hit> {
        let norms = sentence.norms();
        self.phrases
            .find_iter(&norms)
            .into_iter()
            .map(|m| Hit {
                start: m.start,
                end: m.end,
                roles: *m.value,
            })
            .collect()
    }

    fn phrase_at(sentence: &Sentence, start: usize, end: usize) -> String {
        sentence.tokens[start..end]
            .iter()
            .map(|t| t.norm.as_str())
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn find_mentions(&self, note: &TokenizedNote) -> Vec<Mention> {
        let mut out = Vec::new();
        for (si, sentence) in note.sentences.iter().enumerate() {
            for hit in self.scan(sentence) {
                if hit.roles & ANTIBIOTIC != 0 {
                    out.push(Mention {
                        phrase: Self::phrase_at(sentence, hit.start, hit.end),
                        sentence_index: si,
                        token_span: (hit.start, hit.end),
                    });
                }
            }
        }
        out
    }

    pub fn assert_mentions(&self, note: &TokenizedNote, mentions: &[Mention]) -> Vec<AssertedMention> {
        let mut out = Vec::with_capacity(mentions.len());
        let mut cache: Option<(usize, SentenceScopes)> = None;
        for m in mentions {
            let Some(sentence) = note.sentences.get(m.sentence_index) else {
                continue;
            };
            if cache.as_ref().map(|c| c.0) != Some(m.sentence_index) {
                cache = Some((m.sentence_index, self.scopes(sentence)));
            }
            let scopes = &cache.as_ref().unwrap().1;
            let (status, trigger) = scopes.status(m.token_span, sentence);
            out.push(AssertedMention {
                phrase: m.phrase.clone(),
                sentence_index: m.sentence_index,
                token_span: m.token_span,
                status,
                trigger,
            });
        }
        out
    }

    pub fn weak_label(&self, note: &TokenizedNote) -> WeakLabel {
        let mentions = self.find_mentions(note);
        WeakLabel::from_mentions(self.assert_mentions(note, &mentions))
    }

    /// Tokenizes with the lexicon's conjunctions and labels.
    pub fn label_note(&self, note: &Note) -> WeakLabel {
        self.weak_label(&self.tokenizer.tokenize(note))
    }

    fn scopes(&self, sentence: &Sentence) -> SentenceScopes {
        let n = sentence.tokens.len();
        let mut gap = vec![false; n + 1];
        for &b in &sentence.clause_boundaries {
            gap[b] = true;
        }
        let hits: Vec<Hit> = self
            .scan(sentence)
            .into_iter()
            .filter(|h| h.roles & !ANTIBIOTIC != 0)
            .collect();
        let mut is_trigger = vec![false; n];
        for h in &hits {
            is_trigger[h.start..h.end].iter_mut().for_each(|t| *t = true);
        }

        let mut covers = Vec::new();
        for h in &hits {
            let phrase = Self::phrase_at(sentence, h.start, h.end);
            for (role, kind) in TRIGGER_ROLES {
                if h.roles & role == 0 {
                    continue;
                }
                let forward = matches!(kind, TriggerKind::PreNegation | TriggerKind::PreSpeculation);
                let mut tokens = Vec::new();
                if forward {
                    let mut i = h.end;
                    while i < n && tokens.len() < self.window && !gap[i] && !is_trigger[i] {
                        tokens.push(i);
                        i += 1;
                    }
                } else {
                    let mut i = h.start;
                    while i > 0 && tokens.len() < self.window && !gap[i] && !is_trigger[i - 1] {
                        tokens.push(i - 1);
                        i -= 1;
                    }
                }
                covers.push(Scope {
                    trigger: Trigger {
                        phrase: phrase.clone(),
                        kind,
                        position: (h.start, h.end),
                    },
                    tokens,
                });
            }
        }
        SentenceScopes {
            covers,
            clause: sentence.clause_ids(),
        }
    }
}

struct Scope {
    trigger: Trigger,
    tokens: Vec<usize>,
}

struct SentenceScopes {
    covers: Vec<Scope>,
    clause: Vec<usize>,
}

impl SentenceScopes {
    fn status(&self, span: (usize, usize), sentence: &Sentence) -> (MentionStatus, Option<Trigger>) {
        let distance = |t: &Trigger| {
            if t.position.0 >= span.1 {
                t.position.0 - span.1
            } else {
                span.0.saturating_sub(t.position.1)
            }
        };
        let nearest = |negation: bool| {
            self.covers
                .iter()
                .filter(|s| s.trigger.kind.is_negation() == negation)
                .filter(|s| s.tokens.iter().any(|&t| t >= span.0 && t < span.1))
                .min_by_key(|s| (distance(&s.trigger), s.trigger.position.0))
                .map(|s| s.trigger.clone())
        };
        if let Some(t) = nearest(true) {
            return (MentionStatus::Negated, Some(t));
        }
        if let Some(t) = nearest(false) {
            return (MentionStatus::Speculated, Some(t));
        }
        let clauses = &self.clause[span.0..span.1.min(self.clause.len())];
        let hedge = sentence
            .hedges
            .iter()
            .copied()
            .filter(|&h| clauses.contains(&self.clause[h]))
            .min_by_key(|&h| (h.abs_diff(span.0), h));
        if let Some(h) = hedge {
            return (
                MentionStatus::Speculated,
                Some(Trigger {
                    phrase: "?".into(),
                    kind: TriggerKind::Hedge,
                    position: (h, h + 1),
                }),
            );
        }
        (MentionStatus::Affirmed, None)
    }
}

/// Lexicon matches in `note`; compiles the lexicon on every call, so prefer
/// [`Asserter`] for batches.
pub fn find_mentions(note: &TokenizedNote, lexicon: &Lexicon) -> Vec<Mention> {
    Asserter::new(lexicon, DEFAULT_WINDOW).find_mentions(note)
}

pub fn assert_mentions(
    note: &TokenizedNote,
    mentions: &[Mention],
    lexicon: &Lexicon,
    window: usize,
) -> Vec<AssertedMention> {
    Asserter::new(lexicon, window).assert_mentions(note, mentions)
}

pub fn weak_label(note: &TokenizedNote, lexicon: &Lexicon) -> WeakLabel {
    Asserter::new(lexicon, DEFAULT_WINDOW).weak_label(note)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textnorm::Token;

    fn starter() -> Asserter {
        Asserter::new(&Lexicon::starter(), DEFAULT_WINDOW)
    }

    fn label(text: &str) -> WeakLabel {
        let a = starter();
        a.weak_label(&a.tokenizer().tokenize_text("t", text))
    }

    fn statuses(text: &str) -> Vec<(String, MentionStatus)> {
        label(text)
            .mentions
            .into_iter()
            .map(|m| (m.phrase, m.status))
            .collect()
    }

    fn sentence_of(norms: &[&str]) -> TokenizedNote {
        TokenizedNote {
            note_id: "x".into(),
            sentences: vec![Sentence {
                tokens: norms
                    .iter()
                    .map(|n| Token {
                        surface: n.to_string(),
                        norm: n.to_string(),
                        char_span: (0, 0),
                    })
                    .collect(),
                clause_boundaries: vec![],
                hedges: vec![],
            }],
        }
    }

    #[test]
    fn mention_span_in_medicated_snippet() {
        let mut lex = Lexicon::default();
        lex.insert(LexiconSet::Antibiotics, "cefazolin").unwrap();
        let note = sentence_of(&["medicated", "with", "iv", "cefazolin", "dose", "2", "of", "3"]);
        let m = find_mentions(&note, &lex);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].token_span, (3, 4));
    }

    #[test]
    fn longest_term_wins() {
        let mut lex = Lexicon::default();
        lex.insert(LexiconSet::Antibiotics, "pen g").unwrap();
        lex.insert(LexiconSet::Antibiotics, "pen").unwrap();
        let m = find_mentions(&sentence_of(&["pen", "g"]), &lex);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].phrase, "pen g");
    }

    #[test]
    fn no_terms_no_mentions() {
        assert!(label("Pt resting comfortably.").mentions.is_empty());
        assert_eq!(label("Pt resting comfortably.").label, Label::Negative);
    }

    #[test]
    fn allergic_to_penicillin() {
        let w = label("allergic to penicillin");
        assert_eq!(w.mentions[0].status, MentionStatus::Negated);
        let t = w.mentions[0].trigger.as_ref().unwrap();
        assert_eq!(t.phrase, "allergic to");
        assert_eq!(t.kind, TriggerKind::PreNegation);
        assert_eq!(t.position, (0, 2));
    }

    #[test]
    fn afebrile_on_antibiotics() {
        let w = label("Afebrile on antibiotics.");
        assert_eq!(w.label, Label::Positive);
        assert_eq!(w.mentions[0].status, MentionStatus::Affirmed);
        assert!(w.mentions[0].trigger.is_none());
    }

    #[test]
    fn clause_boundary_stops_negation() {
        assert_eq!(
            statuses("allergic to penicillin, started on vancomycin"),
            vec![
                ("penicillin".into(), MentionStatus::Negated),
                ("vancomycin".into(), MentionStatus::Affirmed)
            ]
        );
    }

    #[test]
    fn table_snippets() {
        assert_eq!(
            label("continues on clindamycin(D6), pen-G(D5) and doxycycline(D4) for LLL pneumonia").label,
            Label::Positive
        );
        assert_eq!(label("no antibiotics at this time").label, Label::Negative);
        assert_eq!(label("?levaquin pending cultures").label, Label::Possible);
        assert_eq!(label("Levaquin started for pnuemonia.").label, Label::Positive);
        assert_eq!(label("... medicated with iv cefazolin dose 2 of 3").label, Label::Positive);
        assert_eq!(label("Elevated WBC count, on clindamycin IV.").label, Label::Positive);
    }

    #[test]
    fn post_triggers_look_back() {
        assert_eq!(statuses("vanco discontinued")[0].1, MentionStatus::Negated);
        assert_eq!(statuses("zosyn pending cultures")[0].1, MentionStatus::Speculated);
        assert_eq!(statuses("vanco given, zosyn held")[0].1, MentionStatus::Affirmed);
    }

    #[test]
    fn window_limits_scope() {
        let a = Asserter::new(&Lexicon::starter(), 2);
        let note = a.tokenizer().tokenize_text("t", "denies ever taking any vanco");
        assert_eq!(a.weak_label(&note).mentions[0].status, MentionStatus::Affirmed);
        let a = Asserter::new(&Lexicon::starter(), 5);
        assert_eq!(a.weak_label(&note).mentions[0].status, MentionStatus::Negated);
    }

    #[test]
    fn negation_beats_speculation() {
        let w = label("possible vanco discontinued");
        assert_eq!(w.mentions[0].status, MentionStatus::Negated);
        assert_eq!(w.mentions[0].trigger.as_ref().unwrap().phrase, "discontinued");
    }

    #[test]
    fn trigger_terminates_scope() {
        // "possible" is cut off by "no", which governs the mention
        let w = label("possible no vanco");
        assert_eq!(w.mentions[0].status, MentionStatus::Negated);
        assert_eq!(w.mentions[0].trigger.as_ref().unwrap().phrase, "no");
        // "no" is cut off by "possible"
        let w = label("no possible vanco");
        assert_eq!(w.mentions[0].status, MentionStatus::Speculated);
    }

    #[test]
    fn hedge_is_clause_local() {
        assert_eq!(statuses("vanco?")[0].1, MentionStatus::Speculated);
        assert_eq!(
            statuses("started vanco, ?zosyn"),
            vec![
                ("vanco".into(), MentionStatus::Affirmed),
                ("zosyn".into(), MentionStatus::Speculated)
            ]
        );
    }

    #[test]
    fn scope_is_sentence_local() {
        assert_eq!(statuses("Allergic to. Vanco given.")[0].1, MentionStatus::Affirmed);
        assert_eq!(statuses("No fever\nvanco given")[0].1, MentionStatus::Affirmed);
    }

    #[test]
    fn label_aggregation() {
        assert_eq!(label("allergic to pcn. started on vanco.").label, Label::Positive);
        assert_eq!(label("allergic to pcn. ?vanco").label, Label::Possible);
        assert_eq!(label("allergic to pcn.").label, Label::Negative);
    }

    proptest::proptest! {
        #[test]
        fn affirmed_iff_no_trigger(words in proptest::collection::vec(
            proptest::sample::select(vec!["vanco", "no", "held", "possible", "pending", "and", ",", "?", "pt", "given", "."]),
            0..14,
        )) {
            let text = words.join(" ");
            let a = starter();
            let note = a.tokenizer().tokenize_text("t", &text);
            let w = a.weak_label(&note);
            for m in &w.mentions {
                proptest::prop_assert_eq!(m.status == MentionStatus::Affirmed, m.trigger.is_none());
                let s = &note.sentences[m.sentence_index];
                proptest::prop_assert!(m.token_span.1 <= s.tokens.len());
            }
            proptest::prop_assert_eq!(&w, &a.weak_label(&note));
            // adding an affirmed sentence forces POSITIVE
            let more = a.tokenizer().tokenize_text("t", &format!("{text}\nstarted on cefazolin."));
            proptest::prop_assert_eq!(a.weak_label(&more).label, Label::Positive);
        }
    }
}
