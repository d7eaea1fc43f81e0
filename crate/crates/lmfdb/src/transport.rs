//! HTTP transports: a real blocking client and a recording mock.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("request to {url} failed: {reason}")]
    Failed { url: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub status: u16,
    pub body: String,
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<Response, TransportError>;
}

pub struct HttpTransport {
    client: reqwest::blocking::Client,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Result<Self, TransportError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .user_agent(concat!("periodpoly/", env!("CARGO_PKG_VERSION")))
            .build()
            .map_err(|e| TransportError::Failed {
                url: String::new(),
                reason: e.to_string(),
            })?;
        Ok(Self { client })
    }
}

impl Transport for HttpTransport {
    fn get(&self, url: &str) -> Result<Response, TransportError> {
        let failed = |e: reqwest::Error| TransportError::Failed {
            url: url.to_string(),
            reason: e.to_string(),
        };
        let resp = self.client.get(url).send().map_err(failed)?;
        let status = resp.status().as_u16();
        let body = resp.text().map_err(failed)?;
        Ok(Response { status, body })
    }
}

#[derive(Debug, Clone)]
pub struct RecordedCall {
    pub url: String,
    pub at: Instant,
}

enum Reply {
    Ok(Response),
    Fail,
}

/// Answers from a fixed route table and records every call.
///
/// A route matches when its pattern is a substring of the requested URL;
/// the first match wins. Unmatched URLs get a 404.
#[derive(Default)]
pub struct MockTransport {
    routes: Vec<(String, Reply)>,
    calls: Mutex<Vec<RecordedCall>>,
}

impl MockTransport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn route(mut self, pattern: impl Into<String>, status: u16, body: impl Into<String>) -> Self {
        self.routes.push((
            pattern.into(),
            Reply::Ok(Response {
                status,
                body: body.into(),
            }),
        ));
        self
    }

    /// Every URL containing `pattern` fails at the transport level.
    pub fn fail(mut self, pattern: impl Into<String>) -> Self {
        self.routes.push((pattern.into(), Reply::Fail));
        self
    }

    pub fn calls(&self) -> Vec<RecordedCall> {
        self.calls.lock().unwrap().clone()
    }

    pub fn call_count(&self) -> usize {
        self.calls.lock().unwrap().len()
    }
}

impl Transport for MockTransport {
    fn get(&self, url: &str) -> Result<Response, TransportError> {
        self.calls.lock().unwrap().push(RecordedCall {
            url: url.to_string(),
            at: Instant::now(),
        });
        match self.routes.iter().find(|(p, _)| url.contains(p.as_str())) {
            Some((_, Reply::Ok(r))) => Ok(r.clone()),
            Some((_, Reply::Fail)) => Err(TransportError::Failed {
                url: url.to_string(),
                reason: "connection refused (mock)".into(),
            }),
            None => Ok(Response {
                status: 404,
                body: String::new(),
            }),
        }
    }
}

impl<T: Transport + ?Sized> Transport for std::sync::Arc<T> {
    fn get(&self, url: &str) -> Result<Response, TransportError> {
        (**self).get(url)
    }
}
