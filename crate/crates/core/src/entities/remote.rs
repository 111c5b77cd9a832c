use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EntityError, EntitySet, EntitySource, Extractor, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractRequest {
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractedEntity {
    pub text: String,
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractResponse {
    pub entities: Vec<ExtractedEntity>,
}

/// Counting semaphore bounding in-flight requests.
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

struct Permit<'a>(&'a Gate);

impl Gate {
    fn new(n: usize) -> Self {
        Self {
            free: Mutex::new(n.max(1)),
            cv: Condvar::new(),
        }
    }

    fn acquire(&self) -> Permit<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        Permit(self)
    }
}

impl Drop for Permit<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

/// Client for an HTTP entity-extraction service (`POST {base}/extract`).
///
/// Only entity surface text is used; labels and offsets are accepted and
/// ignored.
pub struct RemoteExtractor {
    base_url: String,
    client: reqwest::blocking::Client,
    gate: Gate,
}

impl RemoteExtractor {
    pub fn new(base_url: &str, max_in_flight: usize, timeout: Duration) -> Result<Self> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| EntityError::Transport(e.to_string()))?;
        Ok(Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            client,
            gate: Gate::new(max_in_flight),
        })
    }

    pub fn extract_raw(&self, text: &str) -> Result<ExtractResponse> {
        let _permit = self.gate.acquire();
        let resp = self
            .client
            .post(format!("{}/extract", self.base_url))
            .json(&ExtractRequest {
                text: text.to_string(),
            })
            .send()
            .map_err(|e| EntityError::Transport(e.to_string()))?;
        let status = resp.status();
        let body = resp
            .text()
            .map_err(|e| EntityError::Transport(e.to_string()))?;
        if !status.is_success() {
            return Err(EntityError::Rejected {
                status: status.as_u16(),
                body,
            });
        }
        serde_json::from_str(&body).map_err(|e| EntityError::Decode(e.to_string()))
    }
}

impl Extractor for RemoteExtractor {
    fn extract(&self, text: &str, source: EntitySource) -> Result<EntitySet> {
        if text.trim().is_empty() {
            return Err(EntityError::EmptyText);
        }
        let resp = self.extract_raw(text)?;
        Ok(EntitySet::from_strings(
            source,
            resp.entities.into_iter().map(|e| e.text),
        ))
    }
}
