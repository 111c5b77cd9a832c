use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};

use super::catalog::Rep;
use super::ratelimit::TokenBucket;
use super::store::{ResponseRecord, ResponseStore};
use super::transport::complete_with_retry;
use super::{
    ChatRequest, ChatTransport, Era, ModelRef, ProbeError, RequestContext, RetryPolicy,
    TransportError,
};
use crate::exec::Execution;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    Rep,
    Eep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleFailure {
    pub sample_index: u32,
    pub error: String,
}

/// Responses for one (model, prompt) pair, ordered by sample index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseBatch {
    pub prompt_id: String,
    pub model: String,
    pub era: Option<Era>,
    pub sample_indices: Vec<u32>,
    pub responses: Vec<String>,
    pub timestamps: Vec<String>,
    pub request: ChatRequest,
    /// Retries spent on freshly requested samples.
    pub retries: u32,
    /// Samples served from the store instead of the endpoint.
    pub reused: u32,
    pub failures: Vec<SampleFailure>,
}

impl ResponseBatch {
    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CellFailure {
    pub model: String,
    pub prompt_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CampaignReport {
    pub cells: usize,
    pub responses: usize,
    pub requested: usize,
    pub reused: usize,
    pub failures: Vec<CellFailure>,
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

/// Drives sampling against a transport, persisting every reply.
pub struct Prober<'a> {
    transport: &'a dyn ChatTransport,
    store: Option<&'a ResponseStore>,
    pub retry: RetryPolicy,
    pub exec: Execution,
    /// Upper bound on concurrent requests.
    pub parallelism: usize,
    /// System prompt for probing requests; empty sends none.
    pub system_prompt: String,
    limiters: Mutex<HashMap<String, Arc<TokenBucket>>>,
}

type Existing = BTreeMap<u32, (String, String)>;

impl<'a> Prober<'a> {
    pub fn new(transport: &'a dyn ChatTransport) -> Self {
        Self {
            transport,
            store: None,
            retry: RetryPolicy::default(),
            exec: Execution::default(),
            parallelism: 4,
            system_prompt: String::new(),
            limiters: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_store(mut self, store: &'a ResponseStore) -> Self {
        self.store = Some(store);
        self
    }

    fn limiter(&self, model: &ModelRef) -> Arc<TokenBucket> {
        self.limiters
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entry(model.name.clone())
            .or_insert_with(|| Arc::new(TokenBucket::per_second(model.rate_limit)))
            .clone()
    }

    pub fn request_for(&self, model: &ModelRef, prompt: &str, mode: SampleMode) -> ChatRequest {
        let max_tokens = match mode {
            SampleMode::Rep => model.max_tokens_rep,
            SampleMode::Eep => model.max_tokens_eep,
        };
        ChatRequest::new(
            model,
            &self.system_prompt,
            prompt,
            model.temperature,
            max_tokens,
        )
    }

    fn existing(&self) -> Result<HashMap<(String, String), Existing>, ProbeError> {
        let mut out: HashMap<(String, String), Existing> = HashMap::new();
        if let Some(store) = self.store {
            for r in store.records()? {
                out.entry((r.model, r.prompt_id))
                    .or_default()
                    .insert(r.sample_index, (r.response_text, r.timestamp));
            }
        }
        Ok(out)
    }

    /// Draws `count` samples of one prompt. Samples already in the store are
    /// reused. Failed samples make the call return [`ProbeError::Batch`]
    /// carrying everything that did succeed.
    pub fn sample_completions(
        &self,
        model: &ModelRef,
        prompt_id: &str,
        prompt: &str,
        count: u32,
        mode: SampleMode,
    ) -> Result<ResponseBatch, ProbeError> {
        let existing = self.existing()?;
        let have = existing
            .get(&(model.name.clone(), prompt_id.to_string()))
            .cloned()
            .unwrap_or_default();
        self.sample_with(model, prompt_id, prompt, count, mode, &have)
    }

    fn sample_with(
        &self,
        model: &ModelRef,
        prompt_id: &str,
        prompt: &str,
        count: u32,
        mode: SampleMode,
        have: &Existing,
    ) -> Result<ResponseBatch, ProbeError> {
        if count == 0 {
            return Err(ProbeError::Config("sample count must be >= 1".into()));
        }
        model.validate()?;
        let request = self.request_for(model, prompt, mode);
        let missing: Vec<u32> = (0..count).filter(|i| !have.contains_key(i)).collect();
        let limiter = self.limiter(model);
        let abort = AtomicBool::new(false);

        let fetched = self.exec.with_pool(self.parallelism, || {
            self.exec.map(
                &missing,
                |&i| -> Result<(String, String, u32), TransportError> {
                    if abort.load(Ordering::SeqCst) {
                        return Err(TransportError::Permanent {
                            status: 0,
                            body: "skipped after authentication failure".into(),
                        });
                    }
                    limiter.acquire();
                    let ctx = RequestContext { sample_index: i };
                    let (text, retries) =
                        complete_with_retry(self.transport, model, &request, ctx, self.retry)
                            .inspect_err(|e| {
                                if matches!(e, TransportError::Auth { .. }) {
                                    abort.store(true, Ordering::SeqCst);
                                }
                            })?;
                    let ts = now();
                    if let Some(store) = self.store {
                        store
                            .append(&ResponseRecord {
                                model: model.name.clone(),
                                era: model.era.map(|e| e.to_string()),
                                prompt_id: prompt_id.to_string(),
                                sample_index: i,
                                request: request.clone(),
                                response_text: text.clone(),
                                timestamp: ts.clone(),
                            })
                            .map_err(|e| TransportError::Permanent {
                                status: 0,
                                body: e.to_string(),
                            })?;
                    }
                    Ok((text, ts, retries))
                },
            )
        });

        let mut fresh: BTreeMap<u32, (String, String)> = BTreeMap::new();
        let mut failures = Vec::new();
        let mut retries = 0;
        let mut auth = None;
        for (&i, r) in missing.iter().zip(fetched) {
            match r {
                Ok((text, ts, n)) => {
                    retries += n;
                    fresh.insert(i, (text, ts));
                }
                Err(e) => {
                    if matches!(e, TransportError::Auth { .. }) && auth.is_none() {
                        auth = Some(e.clone());
                    }
                    failures.push(SampleFailure {
                        sample_index: i,
                        error: e.to_string(),
                    });
                }
            }
        }
        if let Some(e) = auth {
            return Err(ProbeError::Transport(e));
        }

        let mut batch = ResponseBatch {
            prompt_id: prompt_id.to_string(),
            model: model.name.clone(),
            era: model.era,
            sample_indices: Vec::new(),
            responses: Vec::new(),
            timestamps: Vec::new(),
            request,
            retries,
            reused: 0,
            failures,
        };
        for i in 0..count {
            let (text, ts) = if let Some(v) = have.get(&i) {
                batch.reused += 1;
                v.clone()
            } else if let Some(v) = fresh.remove(&i) {
                v
            } else {
                continue;
            };
            batch.sample_indices.push(i);
            batch.responses.push(text);
            batch.timestamps.push(ts);
        }
        if batch.failures.is_empty() {
            Ok(batch)
        } else {
            let first = batch.failures[0].error.clone();
            Err(ProbeError::Batch {
                partial: Box::new(batch),
                message: first,
            })
        }
    }

    /// Samples every (model, REP) cell `m` times. Cells that fail are
    /// recorded and the campaign moves on.
    pub fn run_campaign(
        &self,
        models: &[ModelRef],
        reps: &[Rep],
        m: u32,
    ) -> Result<CampaignReport, ProbeError> {
        let existing = self.existing()?;
        let empty = Existing::new();
        let mut report = CampaignReport::default();
        for model in models {
            for rep in reps {
                report.cells += 1;
                let id = rep.id();
                let have = existing
                    .get(&(model.name.clone(), id.clone()))
                    .unwrap_or(&empty);
                let (batch, err) =
                    match self.sample_with(model, &id, &rep.prompt(), m, SampleMode::Rep, have) {
                        Ok(b) => (Some(b), None),
                        Err(ProbeError::Batch { partial, message }) => {
                            (Some(*partial), Some(message))
                        }
                        Err(e) => (None, Some(e.to_string())),
                    };
                if let Some(b) = batch {
                    report.responses += b.len();
                    report.reused += b.reused as usize;
                    report.requested += b.len() - b.reused as usize;
                }
                if let Some(error) = err {
                    report.failures.push(CellFailure {
                        model: model.name.clone(),
                        prompt_id: id,
                        error,
                    });
                }
            }
        }
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probing::catalog::builtin_catalogs;
    use crate::probing::MockTransport;
    use std::time::Duration;

    fn model(name: &str) -> ModelRef {
        let mut m = ModelRef::new(name, "mock://", Some(Era::Decade(1950)));
        m.rate_limit = 0.0;
        m
    }

    fn fast(p: &mut Prober) {
        p.retry = RetryPolicy {
            max_retries: 2,
            base_delay: Duration::from_millis(1),
        };
    }

    #[test]
    fn constant_mock_fifty() {
        let t = MockTransport::constant("a man");
        let p = Prober::new(&t);
        let b = p
            .sample_completions(&model("m"), "rep:x", "p", 50, SampleMode::Rep)
            .unwrap();
        assert_eq!(b.len(), 50);
        assert!(b.responses.iter().all(|r| r == "a man"));
        assert_eq!(b.request.max_tokens, 100);
        assert_eq!(b.request.temperature, 1.0);
        assert_eq!(b.request.top_p, 1.0);
    }

    #[test]
    fn one_transient_failure_is_retried() {
        let t = MockTransport::constant("x").with_transient_failures(1);
        let mut p = Prober::new(&t);
        fast(&mut p);
        p.exec = Execution::Sequential;
        let b = p
            .sample_completions(&model("m"), "rep:x", "p", 3, SampleMode::Rep)
            .unwrap();
        assert_eq!(b.len(), 3);
        assert_eq!(b.retries, 1);
    }

    #[test]
    fn exhausted_retries_carry_partial_results() {
        let t = MockTransport::constant("x").with_transient_failures(3);
        let mut p = Prober::new(&t);
        fast(&mut p);
        p.exec = Execution::Sequential;
        match p.sample_completions(&model("m"), "rep:x", "p", 3, SampleMode::Eep) {
            Err(ProbeError::Batch { partial, .. }) => {
                assert_eq!(partial.len(), 2);
                assert_eq!(partial.failures.len(), 1);
                assert_eq!(partial.request.max_tokens, 1000);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn campaign_counts_and_resumes() {
        let dir = tempfile::tempdir().unwrap();
        let store = ResponseStore::open(&dir.path().join("r.jsonl")).unwrap();
        let t = MockTransport::default();
        let p = Prober::new(&t).with_store(&store);
        let (reps, _) = builtin_catalogs();
        let models = [model("a"), model("b")];
        let r = p.run_campaign(&models, &reps[..3], 2).unwrap();
        assert_eq!((r.cells, r.responses, r.requested), (6, 12, 12));
        assert_eq!(store.records().unwrap().len(), 12);

        let r2 = p.run_campaign(&models, &reps[..3], 2).unwrap();
        assert_eq!((r2.requested, r2.reused), (0, 12));
        let r3 = p.run_campaign(&models, &reps[..3], 3).unwrap();
        assert_eq!(r3.requested, 6);
        assert_eq!(store.records().unwrap().len(), 18);
        assert_eq!(store.keys().unwrap().len(), 18);
    }
}
