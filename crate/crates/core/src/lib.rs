//! Weakly supervised detection of infection evidence in clinical notes.
//!
//! The pipeline runs in two halves. The rule half tokenizes notes, finds
//! antibiotic mentions from a [`lexicon::Lexicon`], scopes negation and
//! speculation triggers around them and aggregates a note-level
//! [`corpus::Label`]. The learning half turns those weak labels into a
//! tf-idf bag-of-words representation and trains a class-weighted linear SVM.
//! CBOW word embeddings support the lexicon expansion loop.

pub mod assertion;
pub mod classifier;
pub mod corpus;
pub mod embeddings;
mod error;
pub mod eval;
pub mod features;
pub mod lexicon;
pub mod matcher;
pub mod textnorm;

pub use error::{Error, Result};
