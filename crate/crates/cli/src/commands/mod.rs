pub mod analyze;
pub mod glove;
pub mod prepare;
pub mod probe;
pub mod validate;

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Duration;

use eraprobe::corpus::{load_corpus, preprocess_book, Book, Corpus, MarkerRules};
use eraprobe::probing::{ModelRef, RetryPolicy};
use eraprobe::Execution;
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{self, CliError, Kind};
use crate::transport::Router;

pub const PREPARE_DIR: &str = "prepare";
pub const VALIDATE_DIR: &str = "validate";
pub const PROBE_DIR: &str = "probe";
pub const CLASSIFY_DIR: &str = "classify";
pub const ANALYZE_DIR: &str = "analyze";
pub const GLOVE_DIR: &str = "glove";
pub const RESPONSES_FILE: &str = "responses.jsonl";
pub const CLASSIFICATIONS_FILE: &str = "classifications.jsonl";

pub struct Context {
    pub cfg: RunConfig,
    pub exec: Execution,
}

impl Context {
    pub fn new(cfg: RunConfig) -> Result<Self, CliError> {
        let exec = cfg.execution();
        let ctx = Self { cfg, exec };
        fs::create_dir_all(ctx.run_dir()).map_err(|e| error::io("config", &ctx.run_dir(), e))?;
        Ok(ctx)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.cfg.run_dir()
    }

    pub fn stage_dir(&self, stage: &'static str, name: &str) -> Result<PathBuf, CliError> {
        let d = self.run_dir().join(name);
        fs::create_dir_all(&d).map_err(|e| error::io(stage, &d, e))?;
        Ok(d)
    }

    fn load_model(&self, stage: &'static str, path: &Path) -> Result<ModelRef, CliError> {
        let mut m = ModelRef::load_profile(path).map_err(|e| error::from_probe(stage, e))?;
        if self.cfg.mock && !m.is_mock() {
            m.url = format!("mock://{}", m.name);
            m.rate_limit = 0.0;
        }
        Ok(m)
    }

    pub fn models(&self, stage: &'static str) -> Result<Vec<ModelRef>, CliError> {
        if self.cfg.profiles.is_empty() {
            return Err(CliError::new(
                Kind::Validation,
                stage,
                "[models] profiles is empty",
            ));
        }
        let models = self
            .cfg
            .profiles
            .iter()
            .map(|p| self.load_model(stage, p))
            .collect::<Result<Vec<_>, _>>()?;
        let mut names: Vec<&str> = models.iter().map(|m| m.name.as_str()).collect();
        names.sort_unstable();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(CliError::new(
                Kind::Validation,
                stage,
                format!("duplicate profile name {:?}", w[0]),
            ));
        }
        Ok(models)
    }

    pub fn judge(&self, stage: &'static str) -> Result<ModelRef, CliError> {
        let p = self.cfg.judge.as_ref().ok_or_else(|| {
            CliError::new(
                Kind::Validation,
                stage,
                "[models] judge is required for method = judge",
            )
        })?;
        self.load_model(stage, p)
    }

    pub fn transport(&self, stage: &'static str) -> Result<Router, CliError> {
        Router::new(Duration::from_secs(self.cfg.timeout_secs))
            .map_err(|e| CliError::new(Kind::Transport, stage, e.to_string()))
    }

    pub fn retry(&self) -> RetryPolicy {
        RetryPolicy {
            max_retries: self.cfg.max_retries,
            base_delay: Duration::from_millis(self.cfg.retry_base_ms),
        }
    }

    /// Corpus with front and back matter removed, plus the per-book word
    /// reduction keyed by title.
    pub fn clean_corpus(
        &self,
        stage: &'static str,
    ) -> Result<(Corpus, Vec<(String, f64)>), CliError> {
        let raw = load_corpus(&self.cfg.corpus_root, &self.cfg.manifest)
            .map_err(|e| error::from_corpus(stage, e))?;
        let rules = MarkerRules::new(self.cfg.start_markers.clone(), self.cfg.end_markers.clone());
        let mut clean = Corpus::default();
        let mut reductions = Vec::new();
        for (&decade, subset) in &raw.subsets {
            for b in &subset.books {
                let p = preprocess_book(&b.title, &b.content, &rules)
                    .map_err(|e| error::from_corpus(stage, e))?;
                reductions.push((b.title.clone(), p.word_reduction));
                clean
                    .insert(
                        decade,
                        Book {
                            content: p.text,
                            ..b.clone()
                        },
                    )
                    .map_err(|e| error::from_corpus(stage, e))?;
            }
        }
        Ok((clean, reductions))
    }

    pub fn require(
        &self,
        stage: &'static str,
        path: &Path,
        producer: &str,
    ) -> Result<(), CliError> {
        if path.exists() {
            Ok(())
        } else {
            Err(CliError::new(
                Kind::MissingStage,
                stage,
                format!("{} not found; run `{producer}` first", path.display()),
            ))
        }
    }

    pub fn outcome(&self, written: Vec<PathBuf>, summary: Vec<String>) -> crate::Outcome {
        crate::Outcome {
            run_dir: self.run_dir(),
            written,
            summary,
        }
    }
}

pub fn write_json<T: Serialize>(
    stage: &'static str,
    path: &Path,
    value: &T,
) -> Result<PathBuf, CliError> {
    let body = serde_json::to_string_pretty(value).map_err(|e| error::io(stage, path, e))? + "\n";
    write_text(stage, path, &body)
}

pub fn write_text(stage: &'static str, path: &Path, body: &str) -> Result<PathBuf, CliError> {
    fs::write(path, body).map_err(|e| error::io(stage, path, e))?;
    Ok(path.to_path_buf())
}
