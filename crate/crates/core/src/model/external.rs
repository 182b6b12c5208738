//! Line-delimited JSON protocol for classifiers living in another process.
//!
//! ```text
//! → {"op":"info"}
//! ← {"classes":[...], "n_channels":d, "length":L}
//! → {"op":"predict_proba","instances":[[[f,...],...],...]}
//! ← {"proba":[[p,...],...]}
//! ← {"error":"<message>"}            (any request)
//! ```

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{check_batch, Classifier, ModelError, ProbaMatrix};
use crate::data::TimeSeries;

/// Tolerance on probability row sums received over the wire.
const ROW_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
enum Request {
    Info,
    PredictProba { instances: Vec<Vec<Vec<f64>>> },
}

#[derive(Debug, Serialize, Deserialize)]
struct InfoReply {
    classes: Vec<String>,
    n_channels: usize,
    length: usize,
}

struct Pipe {
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
}

impl Pipe {
    fn round_trip(&mut self, request: &Request) -> Result<Value, ModelError> {
        let line = serde_json::to_string(request).expect("requests serialise");
        writeln!(self.stdin, "{line}")
            .and_then(|_| self.stdin.flush())
            .map_err(|e| ModelError::ProcessExit(format!("write failed: {e}")))?;
        let mut reply = String::new();
        let n = self
            .stdout
            .read_line(&mut reply)
            .map_err(|e| ModelError::ProcessExit(format!("read failed: {e}")))?;
        if n == 0 {
            let status = self.child.try_wait().ok().flatten();
            return Err(ModelError::ProcessExit(match status {
                Some(s) => format!("closed its output ({s})"),
                None => "closed its output".into(),
            }));
        }
        let value: Value = serde_json::from_str(reply.trim())
            .map_err(|e| ModelError::ProtocolViolation(format!("reply is not JSON: {e}")))?;
        if let Some(msg) = value.get("error") {
            return Err(ModelError::ExternalProtocolError(
                msg.as_str().map_or_else(|| msg.to_string(), str::to_string),
            ));
        }
        Ok(value)
    }
}

/// A classifier served by a child process. Requests are serialised through one pipe.
pub struct ExternalClassifier {
    command: String,
    pipe: Mutex<Pipe>,
    class_names: Vec<String>,
    shape: (usize, usize),
}

impl std::fmt::Debug for ExternalClassifier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExternalClassifier")
            .field("command", &self.command)
            .field("class_names", &self.class_names)
            .field("shape", &self.shape)
            .finish()
    }
}

/// Launches `command` through `sh -c` and performs the `info` handshake.
pub fn connect_external(command: &str) -> Result<ExternalClassifier, ModelError> {
    let mut child = Command::new("sh")
        .arg("-c")
        .arg(command)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::inherit())
        .spawn()
        .map_err(|e| ModelError::HandshakeFailure(format!("cannot launch {command:?}: {e}")))?;
    let stdin = child.stdin.take().expect("piped stdin");
    let stdout = BufReader::new(child.stdout.take().expect("piped stdout"));
    let mut pipe = Pipe { child, stdin, stdout };
    let info = pipe.round_trip(&Request::Info).map_err(|e| match e {
        ModelError::ExternalProtocolError(m) => ModelError::HandshakeFailure(m),
        other => other,
    })?;
    let info: InfoReply = serde_json::from_value(info)
        .map_err(|e| ModelError::HandshakeFailure(format!("bad info reply: {e}")))?;
    if info.classes.is_empty() || info.n_channels == 0 || info.length == 0 {
        return Err(ModelError::HandshakeFailure("info reply describes an empty model".into()));
    }
    Ok(ExternalClassifier {
        command: command.to_string(),
        pipe: Mutex::new(pipe),
        class_names: info.classes,
        shape: (info.n_channels, info.length),
    })
}

impl ExternalClassifier {
    pub fn command(&self) -> &str {
        &self.command
    }
}

impl Drop for ExternalClassifier {
    fn drop(&mut self) {
        if let Ok(pipe) = self.pipe.get_mut() {
            let _ = pipe.child.kill();
            let _ = pipe.child.wait();
        }
    }
}

fn validate_rows(proba: &ProbaMatrix, rows: usize, classes: usize) -> Result<(), ModelError> {
    if proba.len() != rows {
        return Err(ModelError::ProtocolViolation(format!("expected {rows} rows, got {}", proba.len())));
    }
    for (i, row) in proba.iter().enumerate() {
        if row.len() != classes {
            return Err(ModelError::ProtocolViolation(format!(
                "row {i} has {} entries, expected {classes}",
                row.len()
            )));
        }
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ModelError::ProtocolViolation(format!("row {i} has a negative or non-finite entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
            return Err(ModelError::ProtocolViolation(format!("row {i} sums to {sum}")));
        }
    }
    Ok(())
}

impl Classifier for ExternalClassifier {
    fn class_names(&self) -> &[String] {
        &self.class_names
    }

    fn input_shape(&self) -> (usize, usize) {
        self.shape
    }

    fn predict_proba(&self, batch: &[TimeSeries]) -> Result<ProbaMatrix, ModelError> {
        check_batch(self.shape, batch)?;
        if batch.is_empty() {
            return Ok(Vec::new());
        }
        let request = Request::PredictProba { instances: batch.iter().map(TimeSeries::to_rows).collect() };
        let reply = {
            let mut pipe = self.pipe.lock().unwrap_or_else(|p| p.into_inner());
            pipe.round_trip(&request)?
        };
        let proba: ProbaMatrix = reply
            .get("proba")
            .cloned()
            .ok_or_else(|| ModelError::ProtocolViolation("reply lacks \"proba\"".into()))
            .and_then(|v| {
                serde_json::from_value(v).map_err(|e| ModelError::ProtocolViolation(format!("bad proba: {e}")))
            })?;
        validate_rows(&proba, batch.len(), self.class_names.len())?;
        Ok(proba)
    }
}

/// Answers protocol requests from `input` on `output` using `model`, until end of input.
pub fn serve_protocol<R: BufRead, W: Write>(model: &dyn Classifier, input: R, mut output: W) -> std::io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = match serde_json::from_str::<Request>(&line) {
            Err(e) => serde_json::json!({ "error": format!("bad request: {e}") }),
            Ok(Request::Info) => {
                let (d, len) = model.input_shape();
                serde_json::json!({ "classes": model.class_names(), "n_channels": d, "length": len })
            }
            Ok(Request::PredictProba { instances }) => {
                let batch: Result<Vec<TimeSeries>, _> = instances.into_iter().map(TimeSeries::from_rows).collect();
                match batch.map_err(ModelError::from).and_then(|b| model.predict_proba(&b)) {
                    Ok(proba) => serde_json::json!({ "proba": proba }),
                    Err(e) => serde_json::json!({ "error": e.to_string() }),
                }
            }
        };
        writeln!(output, "{reply}")?;
        output.flush()?;
    }
    Ok(())
}
