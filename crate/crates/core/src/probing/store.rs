use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatRequest, ProbeError};

/// One persisted model reply.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub model: String,
    pub era: Option<String>,
    pub prompt_id: String,
    pub sample_index: u32,
    pub request: ChatRequest,
    pub response_text: String,
    pub timestamp: String,
}

impl ResponseRecord {
    pub fn key(&self) -> CellKey {
        (
            self.model.clone(),
            self.prompt_id.clone(),
            self.sample_index,
        )
    }
}

/// (model, prompt id, sample index)
pub type CellKey = (String, String, u32);

/// Append-only JSON-lines store of raw responses. Appends are serialized
/// through a mutex so concurrent samplers never interleave lines.
#[derive(Debug)]
pub struct ResponseStore {
    path: PathBuf,
    file: Mutex<File>,
}

fn io_err(path: &Path, e: std::io::Error) -> ProbeError {
    ProbeError::Store(format!("{}: {e}", path.display()))
}

impl ResponseStore {
    pub fn open(path: &Path) -> Result<Self, ProbeError> {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| io_err(path, e))?;
        Ok(Self {
            path: path.to_path_buf(),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&self, rec: &ResponseRecord) -> Result<(), ProbeError> {
        let mut line = serde_json::to_string(rec).map_err(|e| ProbeError::Store(e.to_string()))?;
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        f.write_all(line.as_bytes())
            .and_then(|_| f.flush())
            .map_err(|e| io_err(&self.path, e))
    }

    pub fn records(&self) -> Result<Vec<ResponseRecord>, ProbeError> {
        read_records(&self.path)
    }

    pub fn keys(&self) -> Result<HashSet<CellKey>, ProbeError> {
        Ok(self.records()?.iter().map(ResponseRecord::key).collect())
    }
}

/// Reads every record. A torn final line (an interrupted append) is
/// skipped; any other malformed line is an error.
pub fn read_records(path: &Path) -> Result<Vec<ResponseRecord>, ProbeError> {
    read_jsonl(path)
}

pub(crate) fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, ProbeError> {
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
        Err(e) => return Err(io_err(path, e)),
    };
    let lines: Vec<String> = BufReader::new(file)
        .lines()
        .collect::<Result<_, _>>()
        .map_err(|e| io_err(path, e))?;
    let last = lines.len().saturating_sub(1);
    let mut out = Vec::with_capacity(lines.len());
    for (i, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(line) {
            Ok(r) => out.push(r),
            Err(_) if i == last => {}
            Err(e) => {
                return Err(ProbeError::Store(format!(
                    "{} line {}: {e}",
                    path.display(),
                    i + 1
                )))
            }
        }
    }
    Ok(out)
}
