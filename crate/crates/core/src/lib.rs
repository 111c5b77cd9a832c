//! Toolkit for measuring how societal biases shift across decade-stratified
//! book corpora.
//!
//! The pipeline has five stages, each a module here:
//!
//! * [`corpus`]: load, clean, segment, and export books as sentence-completion
//!   fine-tuning data.
//! * [`entities`]: named-entity extraction and the entity-overlap check used to
//!   confirm that a fine-tuned model actually absorbed its decade's books.
//! * [`probing`]: role-specific prompt catalogs and a chat-completion client that
//!   samples many completions per prompt into an append-only store.
//! * [`classification`]: judge-model prompt templates, judge-output parsing, and
//!   an offline lexicon classifier.
//! * [`analytics`]: frequency tables, Kruskal-Wallis tests, dispersion profiles,
//!   quadratic trend fits, pre-trained deltas, and report rendering.
//!
//! [`embedding`] holds the GloVe association-bias baseline.
//!
//! Data-parallel inner loops go through [`exec::Execution`]. With the default
//! `parallel` feature they run on rayon; without it every call site falls back
//! to a sequential loop that produces identical results.

pub mod analytics;
pub mod classification;
pub mod corpus;
pub mod embedding;
pub mod entities;
pub mod exec;
pub mod probing;
pub mod tokenize;

pub use exec::Execution;
