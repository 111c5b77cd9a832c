use std::collections::HashMap;
use std::sync::atomic::{AtomicU32, Ordering};
use std::sync::Mutex;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use super::catalog::{builtin_catalogs, Demographic};
use super::{ChatRequest, ChatTransport, ModelRef, RequestContext, TransportError};

const SCRIPT: &str = include_str!("../../data/mock_script.json");

/// System prompts of judge requests start with this.
pub const JUDGE_SYSTEM_PREFIX: &str = "You are an assistant tasked with identifying";

#[derive(Debug, Clone, Deserialize)]
pub struct CannedResponse {
    pub text: String,
    /// What a judge answers for this response.
    pub judge: String,
}

#[derive(Debug, Clone, Deserialize)]
pub struct MockScript {
    pub rep: HashMap<Demographic, Vec<CannedResponse>>,
    pub eep: Vec<String>,
    pub fallback: String,
}

impl MockScript {
    pub fn builtin() -> Self {
        serde_json::from_str(SCRIPT).expect("bundled mock script parses")
    }
}

fn prompt_hash(prompt: &str) -> [u8; 32] {
    Sha256::digest(prompt.as_bytes()).into()
}

enum Mode {
    Scripted {
        script: MockScript,
        reps: HashMap<[u8; 32], Demographic>,
        eeps: HashMap<[u8; 32], ()>,
    },
    Constant(String),
}

/// Deterministic in-process chat endpoint.
///
/// REP prompts (recognized by hash) get a canned response chosen by hashing
/// model, prompt and sample index. EEP prompts cycle through the script's
/// entity sentences by sample index. Judge requests are answered with the
/// canned judge label of whichever scripted response the user prompt embeds.
pub struct MockTransport {
    mode: Mode,
    transient_failures: AtomicU32,
    log: Mutex<Vec<ChatRequest>>,
}

impl Default for MockTransport {
    fn default() -> Self {
        Self::scripted(MockScript::builtin())
    }
}

impl MockTransport {
    pub fn scripted(script: MockScript) -> Self {
        let (reps, eeps) = builtin_catalogs();
        Self::with_mode(Mode::Scripted {
            script,
            reps: reps
                .iter()
                .map(|r| (prompt_hash(&r.prompt()), r.demographic))
                .collect(),
            eeps: eeps
                .iter()
                .map(|e| (prompt_hash(&e.prompt()), ()))
                .collect(),
        })
    }

    /// Replies with the same text to every request.
    pub fn constant(text: &str) -> Self {
        Self::with_mode(Mode::Constant(text.to_string()))
    }

    fn with_mode(mode: Mode) -> Self {
        Self {
            mode,
            transient_failures: AtomicU32::new(0),
            log: Mutex::new(Vec::new()),
        }
    }

    /// The next `n` calls fail with a transient error.
    pub fn with_transient_failures(self, n: u32) -> Self {
        self.transient_failures.store(n, Ordering::SeqCst);
        self
    }

    /// Every request received so far, in arrival order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.log.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn judge(script: &MockScript, req: &ChatRequest) -> String {
        let system = req.system().unwrap_or("");
        let (demographic, marker) = if system.contains("identifying the race") {
            (Demographic::Race, "##race:")
        } else if system.contains("identifying the religion") {
            (Demographic::Religion, "##religion:")
        } else if system.contains("sexual orientation") {
            (Demographic::SexualOrientation, "##Classification:")
        } else {
            (Demographic::Gender, "##Classification:")
        };
        let user = req.user();
        let label = script
            .rep
            .get(&demographic)
            .into_iter()
            .flatten()
            .filter(|c| user.contains(&c.text))
            .max_by_key(|c| c.text.len())
            .map_or("neither", |c| c.judge.as_str());
        format!("{marker} {label}")
    }
}

fn pick(model: &str, prompt: &str, sample_index: u32, n: usize) -> usize {
    let mut h = Sha256::new();
    h.update(model.as_bytes());
    h.update([0]);
    h.update(prompt.as_bytes());
    h.update([0]);
    h.update(sample_index.to_le_bytes());
    let d = h.finalize();
    let x = u64::from_le_bytes(d[..8].try_into().expect("8 bytes"));
    (x % n as u64) as usize
}

impl ChatTransport for MockTransport {
    fn complete(
        &self,
        model: &ModelRef,
        req: &ChatRequest,
        ctx: RequestContext,
    ) -> Result<String, TransportError> {
        self.log
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .push(req.clone());
        if self
            .transient_failures
            .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |n| n.checked_sub(1))
            .is_ok()
        {
            return Err(TransportError::Transient("HTTP 500: injected".into()));
        }
        let (script, reps, eeps) = match &self.mode {
            Mode::Constant(t) => return Ok(t.clone()),
            Mode::Scripted { script, reps, eeps } => (script, reps, eeps),
        };
        if req
            .system()
            .is_some_and(|s| s.starts_with(JUDGE_SYSTEM_PREFIX))
        {
            return Ok(Self::judge(script, req));
        }
        let prompt = req.user();
        let h = prompt_hash(prompt);
        if eeps.contains_key(&h) && !script.eep.is_empty() {
            return Ok(script.eep[ctx.sample_index as usize % script.eep.len()].clone());
        }
        if let Some(list) = reps
            .get(&h)
            .and_then(|d| script.rep.get(d))
            .filter(|l| !l.is_empty())
        {
            let i = pick(&model.model, prompt, ctx.sample_index, list.len());
            return Ok(list[i].text.clone());
        }
        Ok(script.fallback.clone())
    }
}
