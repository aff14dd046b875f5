//! Client for external predictive-model servers.
//!
//! The server speaks newline-delimited JSON over its standard input/output:
//!
//! ```text
//! {"id":1,"op":"init","features":[[...]],"targets":[...]}  -> {"id":1,"ok":true,"n":N}
//! {"id":2,"op":"predict","query":[...],"prefix_len":i}     -> {"id":2,"ok":true,"mean":m,
//!                                                               "bins":{"midpoints":[...],"widths":[...],"probs":[...]}}
//! {"id":3,"op":"shutdown"}                                   -> {"id":3,"ok":true}
//! errors                                                     -> {"id":k,"ok":false,"code":"...","message":"..."}
//! ```
//!
//! A session accepts a single `init`. [`BridgeModel`] therefore opens a new
//! session whenever a prediction needs more observations than were uploaded.

use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

use super::{check_dim, check_prefix, PredictError, PredictiveModel, SnapshotHandle};
use crate::domain::{BinnedPmf, PredictiveDistribution};

pub const DEFAULT_BRIDGE_TIMEOUT: Duration = Duration::from_secs(60);

/// Server mean and PMF mean may differ by at most this much (relative to max(1, |mean|)).
const MEAN_CONSISTENCY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BridgeError {
    #[error("bridge protocol violation: {0}")]
    Protocol(String),

    #[error("bridge server did not answer within {0:?}")]
    Timeout(Duration),

    #[error("bridge server error {code}: {message}")]
    Remote { code: String, message: String },

    #[error("bridge session is closed")]
    Closed,

    #[error("bridge i/o failure: {0}")]
    Io(String),
}

#[derive(Serialize)]
#[serde(tag = "op", rename_all = "lowercase")]
enum Request<'a> {
    Init {
        id: u64,
        features: &'a [Vec<f64>],
        targets: &'a [f64],
    },
    Predict {
        id: u64,
        query: &'a [f64],
        prefix_len: usize,
    },
    Shutdown {
        id: u64,
    },
}

/// Server answer to a `predict` request.
#[derive(Debug, Clone, PartialEq)]
pub struct RemotePrediction {
    pub mean: f64,
    pub dist: PredictiveDistribution,
}

/// One request/response session with a model server.
pub struct BridgeSession {
    writer: Box<dyn Write + Send>,
    lines: Receiver<std::io::Result<String>>,
    child: Option<Child>,
    timeout: Duration,
    next_id: u64,
    uploaded: Option<usize>,
    closed: bool,
}

impl BridgeSession {
    /// Talks to a server over arbitrary streams.
    pub fn from_streams<R, W>(reader: R, writer: W, timeout: Duration) -> Self
    where
        R: Read + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut reader = BufReader::new(reader);
            loop {
                let mut line = String::new();
                match reader.read_line(&mut line) {
                    Ok(0) => {
                        let _ = tx.send(Err(std::io::ErrorKind::UnexpectedEof.into()));
                        return;
                    }
                    Ok(_) => {
                        if tx.send(Ok(line)).is_err() {
                            return;
                        }
                    }
                    Err(e) => {
                        let _ = tx.send(Err(e));
                        return;
                    }
                }
            }
        });
        Self {
            writer: Box::new(writer),
            lines: rx,
            child: None,
            timeout,
            next_id: 1,
            uploaded: None,
            closed: false,
        }
    }

    /// Launches `command[0]` with the remaining arguments and speaks over its stdio.
    pub fn spawn(command: &[String], timeout: Duration) -> Result<Self, BridgeError> {
        let (program, args) = command
            .split_first()
            .ok_or_else(|| BridgeError::Io("empty bridge command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| BridgeError::Io(format!("cannot launch {program}: {e}")))?;
        let stdin = child.stdin.take().expect("piped stdin");
        let stdout = child.stdout.take().expect("piped stdout");
        let mut session = Self::from_streams(stdout, stdin, timeout);
        session.child = Some(child);
        Ok(session)
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Number of observations uploaded by `init`, if any.
    pub fn uploaded(&self) -> Option<usize> {
        self.uploaded
    }

    pub fn init(&mut self, features: &[Vec<f64>], targets: &[f64]) -> Result<usize, BridgeError> {
        let id = self.fresh_id();
        let resp = self.round_trip(
            id,
            &Request::Init {
                id,
                features,
                targets,
            },
        )?;
        let n = resp
            .get("n")
            .and_then(Value::as_u64)
            .ok_or_else(|| self.violation("init response lacks integer field n"))?
            as usize;
        self.uploaded = Some(n);
        Ok(n)
    }

    pub fn predict(&mut self, query: &[f64], prefix_len: usize) -> Result<RemotePrediction, BridgeError> {
        let id = self.fresh_id();
        let resp = self.round_trip(
            id,
            &Request::Predict {
                id,
                query,
                prefix_len,
            },
        )?;
        let parsed = parse_prediction(&resp);
        parsed.map_err(|msg| self.violation(&msg))
    }

    pub fn shutdown(&mut self) -> Result<(), BridgeError> {
        if self.closed {
            return Ok(());
        }
        let id = self.fresh_id();
        let result = self.round_trip(id, &Request::Shutdown { id }).map(|_| ());
        self.close();
        result
    }

    fn fresh_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    fn round_trip(&mut self, id: u64, request: &Request<'_>) -> Result<Value, BridgeError> {
        if self.closed {
            return Err(BridgeError::Closed);
        }
        let mut line = serde_json::to_string(request).expect("requests serialise");
        line.push('\n');
        if let Err(e) = self
            .writer
            .write_all(line.as_bytes())
            .and_then(|_| self.writer.flush())
        {
            self.close();
            return Err(BridgeError::Io(e.to_string()));
        }

        let raw = match self.lines.recv_timeout(self.timeout) {
            Ok(Ok(raw)) => raw,
            Ok(Err(e)) => {
                self.close();
                return Err(BridgeError::Io(e.to_string()));
            }
            Err(RecvTimeoutError::Timeout) => {
                self.close();
                return Err(BridgeError::Timeout(self.timeout));
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.close();
                return Err(BridgeError::Io("server output closed".into()));
            }
        };

        let value: Value = serde_json::from_str(raw.trim_end())
            .map_err(|e| self.violation(&format!("malformed response: {e}")))?;
        if !value.is_object() {
            return Err(self.violation("response is not a JSON object"));
        }
        match value.get("id").and_then(Value::as_u64) {
            Some(got) if got == id => {}
            Some(got) => {
                return Err(self.violation(&format!("response id {got} does not match request {id}")))
            }
            None => return Err(self.violation("response lacks integer id")),
        }
        match value.get("ok").and_then(Value::as_bool) {
            Some(true) => Ok(value),
            Some(false) => {
                let code = value.get("code").and_then(Value::as_str);
                let message = value.get("message").and_then(Value::as_str);
                match (code, message) {
                    (Some(code), Some(message)) => Err(BridgeError::Remote {
                        code: code.to_owned(),
                        message: message.to_owned(),
                    }),
                    _ => Err(self.violation("error response lacks code/message")),
                }
            }
            None => Err(self.violation("response lacks boolean ok")),
        }
    }

    fn violation(&mut self, msg: &str) -> BridgeError {
        self.close();
        BridgeError::Protocol(msg.to_owned())
    }

    fn close(&mut self) {
        self.closed = true;
        if let Some(mut child) = self.child.take() {
            // give a server that received shutdown a moment to exit cleanly
            for _ in 0..20 {
                if let Ok(Some(_)) = child.try_wait() {
                    return;
                }
                thread::sleep(Duration::from_millis(5));
            }
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl Drop for BridgeSession {
    fn drop(&mut self) {
        if !self.closed {
            let _ = self.shutdown();
        }
    }
}

fn parse_prediction(resp: &Value) -> Result<RemotePrediction, String> {
    let mean = resp
        .get("mean")
        .and_then(Value::as_f64)
        .ok_or("predict response lacks numeric mean")?;
    let bins = resp.get("bins").ok_or("predict response lacks bins")?;
    let field = |name: &str| -> Result<Vec<f64>, String> {
        bins.get(name)
            .and_then(Value::as_array)
            .ok_or(format!("bins lack array {name}"))?
            .iter()
            .map(|v| v.as_f64().ok_or(format!("non-numeric entry in bins.{name}")))
            .collect()
    };
    let pmf = BinnedPmf::new(field("midpoints")?, field("widths")?, field("probs")?)
        .map_err(|e| e.to_string())?;
    let pmf_mean = pmf.mean();
    if (pmf_mean - mean).abs() > MEAN_CONSISTENCY_TOL * mean.abs().max(1.0) {
        return Err(format!(
            "reported mean {mean} disagrees with PMF mean {pmf_mean}"
        ));
    }
    Ok(RemotePrediction {
        mean,
        dist: PredictiveDistribution::Binned(pmf),
    })
}

/// Predictive mean and PMF from the server at `prefix_len`.
pub fn remote_predict(
    session: &mut BridgeSession,
    query: &[f64],
    prefix_len: usize,
) -> Result<RemotePrediction, BridgeError> {
    session.predict(query, prefix_len)
}

type Connector = Box<dyn FnMut() -> Result<BridgeSession, BridgeError> + Send>;

/// A [`PredictiveModel`] backed by a model server.
///
/// Observations are held locally and uploaded when a session is opened.
/// Snapshots only record the prefix; the server is expected to cache fits.
pub struct BridgeModel {
    dim: usize,
    features: Vec<Vec<f64>>,
    targets: Vec<f64>,
    connect: Connector,
    session: Option<BridgeSession>,
}

impl BridgeModel {
    pub fn new<F>(dim: usize, connect: F) -> Self
    where
        F: FnMut() -> Result<BridgeSession, BridgeError> + Send + 'static,
    {
        Self {
            dim,
            features: Vec::new(),
            targets: Vec::new(),
            connect: Box::new(connect),
            session: None,
        }
    }

    /// Model that launches `command` for every session.
    pub fn spawning(dim: usize, command: Vec<String>, timeout: Duration) -> Self {
        Self::new(dim, move || BridgeSession::spawn(&command, timeout))
    }

    fn session_covering(&mut self, prefix_len: usize) -> Result<&mut BridgeSession, PredictError> {
        check_prefix(prefix_len, self.targets.len())?;
        let stale = match &self.session {
            Some(s) => s.is_closed() || s.uploaded().is_none_or(|n| n < prefix_len),
            None => true,
        };
        if stale {
            if let Some(mut old) = self.session.take() {
                let _ = old.shutdown();
            }
            let mut fresh = (self.connect)()?;
            let n = fresh.init(&self.features, &self.targets)?;
            if n != self.targets.len() {
                return Err(BridgeError::Protocol(format!(
                    "server acknowledged {n} observations, uploaded {}",
                    self.targets.len()
                ))
                .into());
            }
            self.session = Some(fresh);
        }
        Ok(self.session.as_mut().expect("session just ensured"))
    }

    fn remote(&mut self, query: &[f64], prefix_len: usize) -> Result<RemotePrediction, PredictError> {
        check_dim(self.dim, query.len())?;
        let session = self.session_covering(prefix_len)?;
        Ok(session.predict(query, prefix_len)?)
    }
}

impl PredictiveModel for BridgeModel {
    fn input_dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.targets.len()
    }

    fn append(&mut self, x: &[f64], r: f64) -> Result<(), PredictError> {
        check_dim(self.dim, x.len())?;
        if !r.is_finite() {
            return Err(PredictError::Target(r));
        }
        self.features.push(x.to_vec());
        self.targets.push(r);
        Ok(())
    }

    fn snapshot(&mut self, prefix_len: usize) -> Result<SnapshotHandle, PredictError> {
        check_prefix(prefix_len, self.targets.len())?;
        Ok(SnapshotHandle::new(prefix_len, Arc::new(prefix_len)))
    }

    fn predict_mean_at(
        &mut self,
        snapshot: &SnapshotHandle,
        query: &[f64],
    ) -> Result<f64, PredictError> {
        let prefix: usize = *snapshot.state()?;
        Ok(self.remote(query, prefix)?.mean)
    }

    fn predict_dist_at(
        &mut self,
        snapshot: &SnapshotHandle,
        query: &[f64],
    ) -> Result<PredictiveDistribution, PredictError> {
        let prefix: usize = *snapshot.state()?;
        Ok(self.remote(query, prefix)?.dist)
    }
}
