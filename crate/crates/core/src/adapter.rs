//! Client side of the line-delimited adapter protocol.
//!
//! An adapter is a child process started with `sh -c CMD`. It writes a
//! handshake line `{"protocol":"amrfact-scorer/1"}`, then answers each
//! request line with one response line carrying the same `id`, in any order.
//! Scoring requests carry `premise` and `hypothesis` and are answered with
//! `{id, score}`; bridge requests carry `input` and are answered with
//! `{id, output}`. A `{id, error}` reply fails the whole batch.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROTOCOL: &str = "amrfact-scorer/1";
pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(120);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Entailment,
    Relevance,
    Amr2text,
    Text2amr,
}

impl Task {
    fn is_score(self) -> bool {
        matches!(self, Task::Entailment | Task::Relevance)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdapterRequest {
    pub id: String,
    pub task: Task,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub premise: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hypothesis: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
}

impl AdapterRequest {
    pub fn score(id: impl Into<String>, task: Task, premise: &str, hypothesis: &str) -> Self {
        AdapterRequest {
            id: id.into(),
            task,
            premise: Some(premise.to_string()),
            hypothesis: Some(hypothesis.to_string()),
            input: None,
        }
    }

    pub fn bridge(id: impl Into<String>, task: Task, input: &str) -> Self {
        AdapterRequest {
            id: id.into(),
            task,
            premise: None,
            hypothesis: None,
            input: Some(input.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum AdapterReply {
    Score(f64),
    Output(String),
}

impl AdapterReply {
    pub fn score(&self) -> Option<f64> {
        match self {
            AdapterReply::Score(s) => Some(*s),
            AdapterReply::Output(_) => None,
        }
    }

    pub fn into_output(self) -> Option<String> {
        match self {
            AdapterReply::Output(s) => Some(s),
            AdapterReply::Score(_) => None,
        }
    }
}

#[derive(Debug, Deserialize)]
struct RawResponse {
    id: Option<serde_json::Value>,
    score: Option<f64>,
    output: Option<String>,
    error: Option<String>,
}

#[derive(Debug, Deserialize)]
struct Handshake {
    protocol: String,
}

#[derive(Debug, Error)]
pub enum AdapterError {
    #[error("cannot start adapter `{command}`: {source}")]
    Spawn {
        command: String,
        #[source]
        source: std::io::Error,
    },
    #[error("adapter handshake failed: {0}")]
    Handshake(String),
    #[error("adapter i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("adapter did not answer within {0:?}")]
    Timeout(Duration),
    #[error("adapter closed its output with {pending} request(s) unanswered")]
    Closed { pending: usize },
    #[error("adapter protocol violation: {0}")]
    Protocol(String),
    #[error("adapter reported an error for `{id}`: {message}")]
    Remote { id: String, message: String },
}

/// A running adapter process.
pub struct Adapter {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
}

impl Adapter {
    /// Starts `sh -c command` and waits for the handshake line.
    pub fn spawn(command: &str, timeout: Duration) -> Result<Self, AdapterError> {
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|source| AdapterError::Spawn {
                command: command.to_string(),
                source,
            })?;
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut adapter = Adapter {
            stdin: child.stdin.take(),
            child,
            lines: rx,
            timeout,
        };
        let line = adapter
            .next_line()
            .map_err(|e| AdapterError::Handshake(e.to_string()))?
            .ok_or_else(|| AdapterError::Handshake("adapter exited before the handshake".into()))?;
        let hs: Handshake = serde_json::from_str(&line)
            .map_err(|e| AdapterError::Handshake(format!("malformed handshake {line:?}: {e}")))?;
        if hs.protocol != PROTOCOL {
            return Err(AdapterError::Handshake(format!(
                "unsupported protocol `{}` (expected `{PROTOCOL}`)",
                hs.protocol
            )));
        }
        Ok(adapter)
    }

    fn next_line(&mut self) -> Result<Option<String>, AdapterError> {
        match self.lines.recv_timeout(self.timeout) {
            Ok(line) => Ok(Some(line?)),
            Err(RecvTimeoutError::Timeout) => Err(AdapterError::Timeout(self.timeout)),
            Err(RecvTimeoutError::Disconnected) => Ok(None),
        }
    }

    /// Sends every request and collects replies, returned in request order.
    pub fn call(&mut self, requests: &[AdapterRequest]) -> Result<Vec<AdapterReply>, AdapterError> {
        let mut pending: HashMap<&str, usize> = HashMap::with_capacity(requests.len());
        for (i, r) in requests.iter().enumerate() {
            if pending.insert(r.id.as_str(), i).is_some() {
                return Err(AdapterError::Protocol(format!("request id `{}` used twice", r.id)));
            }
        }
        let mut payload = Vec::new();
        for r in requests {
            serde_json::to_writer(&mut payload, r).map_err(|e| AdapterError::Protocol(e.to_string()))?;
            payload.push(b'\n');
        }
        let mut stdin = self
            .stdin
            .take()
            .ok_or_else(|| AdapterError::Protocol("adapter input already closed".into()))?;
        let writer = thread::spawn(move || -> std::io::Result<ChildStdin> {
            stdin.write_all(&payload)?;
            stdin.flush()?;
            Ok(stdin)
        });

        let mut replies: Vec<Option<AdapterReply>> = vec![None; requests.len()];
        let mut remaining = requests.len();
        while remaining > 0 {
            let Some(line) = self.next_line()? else {
                return Err(AdapterError::Closed { pending: remaining });
            };
            if line.trim().is_empty() {
                continue;
            }
            let raw: RawResponse = serde_json::from_str(&line)
                .map_err(|e| AdapterError::Protocol(format!("malformed response {line:?}: {e}")))?;
            let id = match raw.id {
                Some(serde_json::Value::String(s)) => s,
                Some(other) => other.to_string(),
                None => return Err(AdapterError::Protocol(format!("response without id: {line:?}"))),
            };
            let Some(index) = pending.remove(id.as_str()) else {
                return Err(AdapterError::Protocol(format!("unexpected or repeated response id `{id}`")));
            };
            if let Some(message) = raw.error {
                return Err(AdapterError::Remote { id, message });
            }
            let task = requests[index].task;
            let reply = if task.is_score() {
                let score = raw
                    .score
                    .ok_or_else(|| AdapterError::Protocol(format!("response `{id}` has no score")))?;
                if !score.is_finite() || (task == Task::Entailment && !(0.0..=1.0).contains(&score)) {
                    return Err(AdapterError::Protocol(format!("response `{id}` has out-of-range score {score}")));
                }
                AdapterReply::Score(score)
            } else {
                AdapterReply::Output(
                    raw.output
                        .ok_or_else(|| AdapterError::Protocol(format!("response `{id}` has no output")))?,
                )
            };
            replies[index] = Some(reply);
            remaining -= 1;
        }
        let stdin = writer
            .join()
            .map_err(|_| AdapterError::Protocol("writer thread panicked".into()))??;
        self.stdin = Some(stdin);
        Ok(replies.into_iter().map(|r| r.expect("all answered")).collect())
    }
}

impl Drop for Adapter {
    fn drop(&mut self) {
        drop(self.stdin.take());
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Splits `requests` into `jobs` contiguous chunks, each served by its own
/// adapter process, and returns replies in request order.
pub fn call_parallel(
    command: &str,
    timeout: Duration,
    requests: &[AdapterRequest],
    jobs: usize,
) -> Result<Vec<AdapterReply>, AdapterError> {
    if requests.is_empty() {
        return Ok(Vec::new());
    }
    let jobs = jobs.clamp(1, requests.len());
    let chunk = requests.len().div_ceil(jobs);
    let results: Vec<Result<Vec<AdapterReply>, AdapterError>> = thread::scope(|scope| {
        let handles: Vec<_> = requests
            .chunks(chunk)
            .map(|part| scope.spawn(move || Adapter::spawn(command, timeout)?.call(part)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(AdapterError::Protocol("adapter worker panicked".into()))))
            .collect()
    });
    let mut out = Vec::with_capacity(requests.len());
    for r in results {
        out.extend(r?);
    }
    Ok(out)
}
