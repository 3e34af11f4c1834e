//! Multi-pattern matching over normalized token sequences.
//!
//! Patterns are phrases of one or more tokens stored in a trie keyed by token.
//! A scan is leftmost-first and takes the longest pattern available at each
//! start position; matches never overlap.

use std::collections::HashMap;

#[derive(Debug, Clone)]
struct Node<V> {
    children: HashMap<String, usize>,
    value: Option<V>,
}

impl<V> Node<V> {
    fn new() -> Self {
        Node {
            children: HashMap::new(),
            value: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PhraseMatcher<V> {
    nodes: Vec<Node<V>>,
    longest: usize,
}

/// One non-overlapping match: tokens `start..end`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhraseMatch<'a, V> {
    pub start: usize,
    pub end: usize,
    pub value: &'a V,
}

impl<V> Default for PhraseMatcher<V> {
    fn default() -> Self {
        PhraseMatcher {
            nodes: vec![Node::new()],
            longest: 0,
        }
    }
}

impl<V> PhraseMatcher<V> {
    pub fn new() -> Self {
        Self::default()
    }

    fn node_for<S: AsRef<str>>(&mut self, phrase: &[S]) -> usize {
        let mut node = 0;
        for tok in phrase {
            let tok = tok.as_ref();
            node = match self.nodes[node].children.get(tok) {
                Some(&next) => next,
                None => {
                    let next = self.nodes.len();
                    self.nodes.push(Node::new());
                    self.nodes[node].children.insert(tok.to_owned(), next);
                    next
                }
            };
        }
        self.longest = self.longest.max(phrase.len());
        node
    }

    /// Returns the value slot of `phrase`, creating it with `V::default()`.
    /// Empty phrases are ignored and return `None`.
    pub fn slot<S: AsRef<str>>(&mut self, phrase: &[S]) -> Option<&mut V>
    where
        V: Default,
    {
        if phrase.is_empty() {
            return None;
        }
        let node = self.node_for(phrase);
        Some(self.nodes[node].value.get_or_insert_with(V::default))
    }

    pub fn insert<S: AsRef<str>>(&mut self, phrase: &[S], value: V) {
        if !phrase.is_empty() {
            let node = self.node_for(phrase);
            self.nodes[node].value = Some(value);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.longest == 0
    }

    /// Longest pattern starting exactly at `start`, if any.
    pub fn longest_at<S: AsRef<str>>(&self, tokens: &[S], start: usize) -> Option<PhraseMatch<'_, V>> {
        let mut node = 0;
        let mut best = None;
        for (i, tok) in tokens.iter().enumerate().skip(start) {
            match self.nodes[node].children.get(tok.as_ref()) {
                Some(&next) => node = next,
                None => break,
            }
            if let Some(value) = &self.nodes[node].value {
                best = Some(PhraseMatch {
                    start,
                    end: i + 1,
                    value,
                });
            }
        }
        best
    }

    pub fn find_iter<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<PhraseMatch<'_, V>> {
        let mut out = Vec::new();
        if self.is_empty() {
            return out;
        }
        let mut i = 0;
        while i < tokens.len() {
            match self.longest_at(tokens, i) {
                Some(m) => {
                    i = m.end;
                    out.push(m);
                }
                None => i += 1,
            }
        }
        out
    }
}
