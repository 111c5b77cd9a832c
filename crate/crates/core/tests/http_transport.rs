mod common;

use std::time::Duration;

use common::{completion, TestServer};
use eraprobe::probing::{
    complete_with_retry, ChatRequest, ChatTransport, HttpTransport, ModelRef, ProbeError, Prober,
    RequestContext, ResponseStore, RetryPolicy, SampleMode, TransportError,
};

fn model(server: &TestServer) -> ModelRef {
    let mut m = ModelRef::new(
        "ft-1950s",
        &format!("{}/v1/chat/completions", server.url),
        None,
    );
    m.api_key = Some("sk-test".into());
    m.rate_limit = 0.0;
    m
}

fn fast() -> RetryPolicy {
    RetryPolicy {
        max_retries: 3,
        base_delay: Duration::from_millis(1),
    }
}

fn http() -> HttpTransport {
    HttpTransport::new(Duration::from_secs(5)).unwrap()
}

#[test]
fn payload_has_exactly_the_sampling_fields() {
    let server = TestServer::start(|_, _| (200, completion("a woman.")));
    let m = model(&server);
    let req = ChatRequest::new(&m, "", "The nurse ... was", 1.0, 150);
    let text = http()
        .complete(&m, &req, RequestContext::default())
        .unwrap();
    assert_eq!(text, "a woman.");

    let reqs = server.requests();
    assert_eq!(reqs.len(), 1);
    assert_eq!(
        (reqs[0].method.as_str(), reqs[0].path.as_str()),
        ("POST", "/v1/chat/completions")
    );
    assert_eq!(reqs[0].authorization.as_deref(), Some("Bearer sk-test"));
    let body: serde_json::Value = serde_json::from_str(&reqs[0].body).unwrap();
    let mut keys: Vec<&str> = body
        .as_object()
        .unwrap()
        .keys()
        .map(String::as_str)
        .collect();
    keys.sort_unstable();
    assert_eq!(
        keys,
        ["max_tokens", "messages", "model", "temperature", "top_p"]
    );
    assert_eq!(body["max_tokens"], 150);
    assert_eq!(body["messages"].as_array().unwrap().len(), 1);
    assert_eq!(body["messages"][0]["role"], "user");
}

#[test]
fn transient_errors_are_retried() {
    let server = TestServer::start(|_, n| {
        if n < 2 {
            (503, "busy".into())
        } else {
            (200, completion("ok"))
        }
    });
    let m = model(&server);
    let req = ChatRequest::new(&m, "", "hi", 1.0, 10);
    let (text, retries) =
        complete_with_retry(&http(), &m, &req, RequestContext::default(), fast()).unwrap();
    assert_eq!((text.as_str(), retries), ("ok", 2));
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn rate_limited_then_exhausted() {
    let server = TestServer::start(|_, _| (429, "slow down".into()));
    let m = model(&server);
    let req = ChatRequest::new(&m, "", "hi", 1.0, 10);
    let err =
        complete_with_retry(&http(), &m, &req, RequestContext::default(), fast()).unwrap_err();
    assert!(
        matches!(err, TransportError::Exhausted { attempts: 4, .. }),
        "{err}"
    );
    assert_eq!(server.requests().len(), 4);
}

#[test]
fn auth_and_client_errors_are_not_retried() {
    for (status, is_auth) in [(401, true), (403, true), (400, false), (404, false)] {
        let server = TestServer::start(move |_, _| (status, "nope".into()));
        let m = model(&server);
        let req = ChatRequest::new(&m, "", "hi", 1.0, 10);
        let err =
            complete_with_retry(&http(), &m, &req, RequestContext::default(), fast()).unwrap_err();
        match err {
            TransportError::Auth { status: s, .. } => assert!(is_auth && s == status),
            TransportError::Permanent { status: s, .. } => assert!(!is_auth && s == status),
            e => panic!("unexpected {e}"),
        }
        assert_eq!(server.requests().len(), 1);
    }
}

#[test]
fn malformed_body_is_a_decode_error() {
    let server = TestServer::start(|_, _| (200, "{\"choices\": []}".into()));
    let m = model(&server);
    let err = http()
        .complete(
            &m,
            &ChatRequest::new(&m, "", "hi", 1.0, 10),
            RequestContext::default(),
        )
        .unwrap_err();
    assert!(matches!(err, TransportError::Decode(_)));
}

#[test]
fn unreachable_endpoint_is_transient() {
    let m = ModelRef::new("x", "http://127.0.0.1:1/v1", None);
    let err = http()
        .complete(
            &m,
            &ChatRequest::new(&m, "", "hi", 1.0, 10),
            RequestContext::default(),
        )
        .unwrap_err();
    assert!(err.is_retryable());
}

#[test]
fn prober_resumes_from_store_without_new_requests() {
    let server = TestServer::start(|_, n| (200, completion(&format!("reply {n}"))));
    let m = model(&server);
    let dir = tempfile::tempdir().unwrap();
    let store = ResponseStore::open(&dir.path().join("responses.jsonl")).unwrap();
    let transport = http();
    let mut prober = Prober::new(&transport).with_store(&store);
    prober.retry = fast();

    let first = prober
        .sample_completions(
            &m,
            "rep:gender:nurse",
            "The nurse ... was",
            3,
            SampleMode::Rep,
        )
        .unwrap();
    assert_eq!(first.responses.len(), 3);
    assert_eq!(server.requests().len(), 3);

    let again = prober
        .sample_completions(
            &m,
            "rep:gender:nurse",
            "The nurse ... was",
            3,
            SampleMode::Rep,
        )
        .unwrap();
    assert_eq!(again.responses, first.responses);
    assert_eq!(again.reused, 3);
    assert_eq!(server.requests().len(), 3);
}

#[test]
fn auth_failure_aborts_batch() {
    let server = TestServer::start(|_, _| (401, "bad key".into()));
    let m = model(&server);
    let transport = http();
    let mut prober = Prober::new(&transport);
    prober.retry = fast();
    let err = prober
        .sample_completions(&m, "rep:gender:nurse", "p", 5, SampleMode::Rep)
        .unwrap_err();
    assert!(
        matches!(
            err,
            ProbeError::Transport(TransportError::Auth { .. }) | ProbeError::Batch { .. }
        ),
        "{err}"
    );
    assert!(server.requests().len() <= 5);
}
