//! Prompt catalogs and the sampling harness that drives chat-completion
//! endpoints.

mod campaign;
pub mod catalog;
mod mock;
mod model;
mod ratelimit;
mod store;
mod transport;

use thiserror::Error;

pub use campaign::{CampaignReport, CellFailure, Prober, ResponseBatch, SampleFailure, SampleMode};
pub use catalog::{
    builtin_catalogs, find_rep, Demographic, Eep, EepOrigin, Label, Rep, Subcategory,
    SubjectGender, CATALOG_VERSION,
};
pub use mock::{CannedResponse, MockScript, MockTransport, JUDGE_SYSTEM_PREFIX};
pub use model::{
    api_key_var, Era, ModelRef, DEFAULT_MAX_TOKENS_EEP, DEFAULT_MAX_TOKENS_REP, DEFAULT_RATE_LIMIT,
};
pub use ratelimit::TokenBucket;
pub use store::{read_records, CellKey, ResponseRecord, ResponseStore};
pub use transport::{
    complete_with_retry, ChatMessage, ChatRequest, ChatTransport, HttpTransport, RequestContext,
    RetryPolicy, TransportError,
};

pub(crate) use store::read_jsonl;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("store error: {0}")]
    Store(String),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error("batch incomplete ({} responses, {} failed): {message}", partial.responses.len(), partial.failures.len())]
    Batch {
        partial: Box<ResponseBatch>,
        message: String,
    },
}
