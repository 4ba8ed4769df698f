use std::time::Duration;

use linkgraph::engine::{BindingTable, EngineError, RemoteConnector, RemoteErrorKind, RemoteGraph};
use linkgraph::wire::WireResult;
use ureq::Agent;

use crate::USER_HEADER;

/// Client side of one `USE GRAPH (url)`: each batch is one POST, validated
/// against the ETag of the previous response.
pub struct RemoteSession {
    url: String,
    user: String,
    last_etag: Option<String>,
    agent: Agent,
}

fn remote(kind: RemoteErrorKind, status: Option<u16>, message: impl Into<String>) -> EngineError {
    EngineError::Remote {
        kind,
        status,
        message: message.into(),
    }
}

impl RemoteSession {
    pub fn new(url: &str, user: &str) -> RemoteSession {
        let agent: Agent = Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(30)))
            .build()
            .into();
        RemoteSession {
            url: url.to_string(),
            user: user.to_string(),
            last_etag: None,
            agent,
        }
    }

    pub fn url(&self) -> &str {
        &self.url
    }

    pub fn last_etag(&self) -> Option<&str> {
        self.last_etag.as_deref()
    }

    /// Sends `statements` as one remote transaction. An empty batch sends
    /// nothing.
    pub fn execute_wire(&mut self, statements: &str) -> Result<Option<WireResult>, EngineError> {
        if statements.trim().is_empty() {
            return Ok(None);
        }
        let mut req = self
            .agent
            .post(&self.url)
            .header(USER_HEADER, &self.user)
            .content_type("text/plain; charset=utf-8");
        if let Some(tag) = &self.last_etag {
            req = req.header("If-Match", tag);
        }
        let mut resp = req
            .send(statements)
            .map_err(|e| remote(RemoteErrorKind::Connect, None, e.to_string()))?;
        let status = resp.status().as_u16();
        let etag = resp
            .headers()
            .get("etag")
            .and_then(|v| v.to_str().ok())
            .map(str::to_string);
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| remote(RemoteErrorKind::Connect, Some(status), e.to_string()))?;
        if status != 200 {
            let message = serde_json::from_str::<serde_json::Value>(&body)
                .ok()
                .and_then(|v| v.get("error").and_then(|m| m.as_str()).map(str::to_string))
                .unwrap_or(body);
            let kind = match status {
                400 => RemoteErrorKind::Parse,
                403 => RemoteErrorKind::Forbidden,
                404 => RemoteErrorKind::NotFound,
                409 => RemoteErrorKind::Conflict,
                412 => RemoteErrorKind::PreconditionFailed,
                _ => RemoteErrorKind::Other,
            };
            return Err(remote(kind, Some(status), message));
        }
        let mut wire: WireResult = serde_json::from_str(&body)
            .map_err(|e| remote(RemoteErrorKind::Other, Some(status), e.to_string()))?;
        if etag.is_some() {
            self.last_etag = etag.clone();
        }
        wire.etag = etag;
        Ok(Some(wire))
    }
}

impl RemoteGraph for RemoteSession {
    fn execute(&mut self, statements: &str) -> Result<Option<BindingTable>, EngineError> {
        let Some(wire) = self.execute_wire(statements)? else {
            return Ok(None);
        };
        if wire.columns.is_empty() {
            return Ok(None);
        }
        wire.to_table()
            .map(Some)
            .map_err(|e| remote(RemoteErrorKind::Other, Some(200), e.to_string()))
    }
}

/// Opens a [`RemoteSession`] for each `USE GRAPH (url)`.
#[derive(Debug, Default, Clone, Copy)]
pub struct HttpConnector;

impl RemoteConnector for HttpConnector {
    fn connect(&self, url: &str, user: &str) -> Result<Box<dyn RemoteGraph>, EngineError> {
        if !(url.starts_with("http://") || url.starts_with("https://")) {
            return Err(remote(RemoteErrorKind::Connect, None, format!("not an http url: {url}")));
        }
        Ok(Box::new(RemoteSession::new(url, user)))
    }
}
