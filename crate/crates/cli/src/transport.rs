use std::time::Duration;

use eraprobe::probing::{
    ChatRequest, ChatTransport, HttpTransport, MockTransport, ModelRef, RequestContext,
    TransportError,
};

/// Sends `mock://` models to the in-process mock and everything else over HTTP.
pub struct Router {
    mock: MockTransport,
    http: HttpTransport,
}

impl Router {
    pub fn new(timeout: Duration) -> Result<Self, TransportError> {
        Ok(Self {
            mock: MockTransport::default(),
            http: HttpTransport::new(timeout)?,
        })
    }
}

impl ChatTransport for Router {
    fn complete(
        &self,
        model: &ModelRef,
        req: &ChatRequest,
        ctx: RequestContext,
    ) -> Result<String, TransportError> {
        if model.is_mock() {
            self.mock.complete(model, req, ctx)
        } else {
            self.http.complete(model, req, ctx)
        }
    }
}
