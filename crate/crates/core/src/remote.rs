//! Collecting predictions from a model served over HTTP.
//!
//! Each question is one `POST` of `{"id": "...", "prompt": "..."}`; the reply
//! must be `{"id": "...", "label": "T" | "F"}` with the same id. Anything else
//! is recorded as a per-question failure and never guessed.

use std::io;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::eval::{PredictionRecord, RecordKey};
use crate::genset::{Dataset, QuestionRecord};
use crate::inference::Label;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Endpoint {
    pub url: String,
    pub timeout: Duration,
    /// Upper bound on requests in flight.
    pub max_parallel: usize,
}

impl Endpoint {
    pub fn new(url: impl Into<String>) -> Self {
        Self {
            url: url.into(),
            timeout: Duration::from_secs(30),
            max_parallel: 8,
        }
    }
}

#[derive(Debug, Serialize)]
struct RemoteRequest<'a> {
    id: &'a str,
    prompt: &'a str,
}

#[derive(Debug, Deserialize)]
struct RemoteResponse {
    id: String,
    label: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "detail", rename_all = "kebab-case")]
pub enum FailureKind {
    Transport(String),
    MalformedResponse(String),
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RemoteFailure {
    pub id: String,
    #[serde(flatten)]
    pub kind: FailureKind,
}

/// Predictions that came back usable plus every failure, both ordered by
/// record key.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RemoteOutcome {
    pub predictions: Vec<PredictionRecord>,
    pub failures: Vec<RemoteFailure>,
}

impl RemoteOutcome {
    pub fn failure_report(&self) -> String {
        self.failures
            .iter()
            .map(|f| match &f.kind {
                FailureKind::Timeout => format!("{}\ttimeout\n", f.id),
                FailureKind::Transport(d) => format!("{}\ttransport\t{d}\n", f.id),
                FailureKind::MalformedResponse(d) => format!("{}\tmalformed-response\t{d}\n", f.id),
            })
            .collect()
    }
}

fn is_timeout(e: &ureq::Error) -> bool {
    match e {
        ureq::Error::Timeout(_) => true,
        ureq::Error::Io(io) => matches!(
            io.kind(),
            io::ErrorKind::TimedOut | io::ErrorKind::WouldBlock
        ),
        _ => false,
    }
}

fn classify(e: ureq::Error) -> FailureKind {
    if is_timeout(&e) {
        FailureKind::Timeout
    } else {
        FailureKind::Transport(e.to_string())
    }
}

fn ask(agent: &ureq::Agent, url: &str, id: &str, prompt: &str) -> Result<Label, FailureKind> {
    let mut response = agent
        .post(url)
        .send_json(RemoteRequest { id, prompt })
        .map_err(classify)?;
    let status = response.status();
    if !status.is_success() {
        return Err(FailureKind::Transport(format!(
            "HTTP status {}",
            status.as_u16()
        )));
    }
    let body = response.body_mut().read_to_string().map_err(classify)?;
    let parsed: RemoteResponse = serde_json::from_str(&body)
        .map_err(|e| FailureKind::MalformedResponse(format!("not a response object: {e}")))?;
    if parsed.id != id {
        return Err(FailureKind::MalformedResponse(format!(
            "response id `{}` does not match",
            parsed.id
        )));
    }
    match parsed.label.as_str() {
        Some("T") => Ok(Label::T),
        Some("F") => Ok(Label::F),
        _ => Err(FailureKind::MalformedResponse(format!(
            "label {} is not \"T\" or \"F\"",
            parsed.label
        ))),
    }
}

/// Queries the endpoint once per dataset record.
pub fn fetch_remote_predictions(dataset: &Dataset, endpoint: &Endpoint) -> RemoteOutcome {
    let mut records: Vec<&QuestionRecord> = dataset.records().collect();
    records.sort_by_key(|r| RecordKey::of(r));
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(endpoint.timeout))
        .http_status_as_error(false)
        .build()
        .into();
    let results: Mutex<Vec<Option<Result<Label, FailureKind>>>> =
        Mutex::new(vec![None; records.len()]);
    let next = AtomicUsize::new(0);
    let workers = endpoint.max_parallel.clamp(1, records.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(record) = records.get(i) else { break };
                let id = RecordKey::of(record).to_string();
                let result = ask(&agent, &endpoint.url, &id, &record.prompt());
                results
                    .lock()
                    .expect("no worker panics while holding the lock")[i] = Some(result);
            });
        }
    });
    let mut outcome = RemoteOutcome::default();
    for (record, result) in records
        .iter()
        .zip(results.into_inner().expect("workers joined"))
    {
        match result.expect("every index was visited") {
            Ok(label) => outcome
                .predictions
                .push(PredictionRecord::for_record(record, label)),
            Err(kind) => outcome.failures.push(RemoteFailure {
                id: RecordKey::of(record).to_string(),
                kind,
            }),
        }
    }
    outcome
}
