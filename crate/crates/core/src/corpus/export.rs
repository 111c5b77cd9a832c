use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CorpusError, Result, TaskInstance};

/// Supervised fine-tuning hyperparameters written next to each dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneManifest {
    pub batch_size: u32,
    pub optimizer_name: String,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub warmup_steps: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epochs: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lr_multiplier: Option<f64>,
}

impl Default for FinetuneManifest {
    /// Settings for open-weight models trained through a hosted service.
    fn default() -> Self {
        Self {
            batch_size: 4,
            optimizer_name: "AdamW".into(),
            learning_rate: 1e-5,
            weight_decay: 0.01,
            warmup_steps: 100,
            epochs: None,
            lr_multiplier: None,
        }
    }
}

impl FinetuneManifest {
    /// Variant for closed endpoints that only expose an LR multiplier and
    /// epoch count.
    pub fn closed_endpoint() -> Self {
        Self {
            epochs: Some(4),
            lr_multiplier: Some(1.0),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.batch_size > 0
            && self.learning_rate > 0.0
            && self.weight_decay > 0.0
            && self.warmup_steps > 0
            && self.epochs.is_none_or(|e| e > 0)
            && self.lr_multiplier.is_none_or(|m| m > 0.0);
        if ok {
            Ok(())
        } else {
            Err(CorpusError::Validation(format!(
                "fine-tune manifest has a non-positive field: {self:?}"
            )))
        }
    }
}

/// One JSON-lines record of the exported dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinetuneRecord {
    pub system: String,
    pub instruction: String,
    pub response: String,
}

impl From<&TaskInstance> for FinetuneRecord {
    fn from(t: &TaskInstance) -> Self {
        Self {
            system: t.system_prompt.clone(),
            instruction: t.instruction.clone(),
            response: t.expected_response.clone(),
        }
    }
}

fn write_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Write {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes tasks as JSON lines `{system, instruction, response}`.
pub fn write_task_jsonl(tasks: &[TaskInstance], out_path: &Path) -> Result<usize> {
    let file = File::create(out_path).map_err(write_err(out_path))?;
    let mut w = BufWriter::new(file);
    for t in tasks {
        let line = serde_json::to_string(&FinetuneRecord::from(t)).expect("record serializes");
        writeln!(w, "{line}").map_err(write_err(out_path))?;
    }
    w.flush().map_err(write_err(out_path))?;
    Ok(tasks.len())
}

/// Sibling path of the hyperparameter manifest: `x.jsonl` -> `x.manifest.json`.
pub fn manifest_path(out_path: &Path) -> PathBuf {
    out_path.with_extension("manifest.json")
}

/// Writes the dataset and its manifest sidecar; returns the sample count.
pub fn export_finetune_dataset(
    tasks: &[TaskInstance],
    out_path: &Path,
    manifest: &FinetuneManifest,
) -> Result<usize> {
    manifest.validate()?;
    let n = write_task_jsonl(tasks, out_path)?;
    let side = manifest_path(out_path);
    let body = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(&side, body + "\n").map_err(write_err(&side))?;
    Ok(n)
}
