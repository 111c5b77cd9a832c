//! Decade-stratified book corpora: loading, cleanup, segmentation, and
//! fine-tuning export.

mod export;
mod preprocess;
mod segment;
mod stats;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use export::{
    export_finetune_dataset, manifest_path, write_task_jsonl, FinetuneManifest, FinetuneRecord,
};
pub use preprocess::{preprocess_book, MarkerRules, Preprocessed};
pub use segment::{
    format_task, segment_book, segment_subset, Segment, TaskInstance, CONTINUATION_MARKER,
    DEFAULT_SPLIT_FRACTION, DEFAULT_SYSTEM_PROMPT, DEFAULT_TARGET_TOKENS, TASK_PREFIX,
};
pub use stats::{
    author_demographics, corpus_overlap, normalize_title, DemographicCounts, AUTHOR_FIELDS,
};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("failed to read {path}: {source}")]
    Load {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid corpus manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("validation error: {0}")]
    Validation(String),
    #[error("preprocessing error in {title:?}: start marker at byte {start} follows end marker at byte {end}")]
    MarkerOrder {
        title: String,
        start: usize,
        end: usize,
    },
    #[error("book {0:?} has no content to segment")]
    EmptyBook(String),
    #[error("subset for decade {0} is empty")]
    EmptySubset(u16),
    #[error("failed to write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, CorpusError>;

/// Demographic record for one author. Unknown fields stay `None` and are
/// bucketed as "unknown" by [`author_demographics`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Author {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub gender: Option<String>,
    #[serde(default)]
    pub sexual_orientation: Option<String>,
    #[serde(default)]
    pub race: Option<String>,
    #[serde(default)]
    pub religion: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Book {
    pub title: String,
    pub content: String,
    pub year: u16,
    /// One entry per contributor.
    pub authors: Vec<Author>,
}

/// All books from one decade `[start_year, start_year + 10)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecadeSubset {
    pub start_year: u16,
    pub books: Vec<Book>,
}

impl DecadeSubset {
    pub fn end_year_exclusive(&self) -> u16 {
        self.start_year + 10
    }

    pub fn len(&self) -> usize {
        self.books.len()
    }

    pub fn is_empty(&self) -> bool {
        self.books.is_empty()
    }

    /// Decade label like `1950s`.
    pub fn label(&self) -> String {
        format!("{}s", self.start_year)
    }
}

/// Decade subsets keyed by start year, ascending.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    pub subsets: BTreeMap<u16, DecadeSubset>,
}

impl Corpus {
    pub fn subset(&self, decade: u16) -> Option<&DecadeSubset> {
        self.subsets.get(&decade)
    }

    pub fn decades(&self) -> impl Iterator<Item = u16> + '_ {
        self.subsets.keys().copied()
    }

    /// Adds a book, validating its year against the decade.
    pub fn insert(&mut self, decade: u16, book: Book) -> Result<()> {
        if !decade.is_multiple_of(10) {
            return Err(CorpusError::Validation(format!(
                "decade {decade} is not a multiple of 10"
            )));
        }
        if book.year < decade || book.year >= decade + 10 {
            return Err(CorpusError::Validation(format!(
                "book {:?} has year {} outside decade [{}, {})",
                book.title,
                book.year,
                decade,
                decade + 10
            )));
        }
        if book.title.trim().is_empty() {
            return Err(CorpusError::Validation("book with empty title".into()));
        }
        self.subsets
            .entry(decade)
            .or_insert_with(|| DecadeSubset {
                start_year: decade,
                books: Vec::new(),
            })
            .books
            .push(book);
        Ok(())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AuthorField {
    One(Author),
    Many(Vec<Author>),
}

#[derive(Debug, Clone, Deserialize)]
struct ManifestEntry {
    decade: u16,
    title: String,
    year: u16,
    path: String,
    #[serde(default)]
    author: Option<AuthorField>,
}

/// Reads a JSON corpus manifest and every book it references.
///
/// Book paths are resolved against `root`. The manifest is an array of
/// `{decade, title, year, path, author?}` where `author` is one record or a
/// list of records.
pub fn load_corpus(root: &Path, manifest: &Path) -> Result<Corpus> {
    let raw = fs::read_to_string(manifest).map_err(|source| CorpusError::Load {
        path: manifest.to_path_buf(),
        source,
    })?;
    let entries: Vec<ManifestEntry> =
        serde_json::from_str(&raw).map_err(|e| CorpusError::Manifest {
            path: manifest.to_path_buf(),
            message: e.to_string(),
        })?;

    let mut corpus = Corpus::default();
    for entry in entries {
        let path = root.join(&entry.path);
        let content = fs::read_to_string(&path).map_err(|source| CorpusError::Load {
            path: path.clone(),
            source,
        })?;
        let authors = match entry.author {
            None => Vec::new(),
            Some(AuthorField::One(a)) => vec![a],
            Some(AuthorField::Many(v)) => v,
        };
        corpus.insert(
            entry.decade,
            Book {
                title: entry.title,
                content,
                year: entry.year,
                authors,
            },
        )?;
    }
    Ok(corpus)
}
