//! Client for evaluators running in another process.
//!
//! Newline-delimited JSON, one request and one response per line, over TCP
//! or the stdin/stdout of a spawned command:
//!
//! ```text
//! {"cmd":"hello","action_space":N,"feature_version":1}  -> {"ok":true,"name":...}
//! {"cmd":"eval","graphs":[...]}                         -> {"values":[...],"policies":[[...]]}
//! {"cmd":"train","examples":[...]}                      -> {"policy_loss":x,"value_loss":y}
//! {"cmd":"save","path":...} / {"cmd":"load","path":...} -> {"ok":true}
//! ```
//!
//! A transport failure reconnects (with a fresh handshake) and retries
//! idempotent requests up to the configured count. Malformed responses are
//! protocol errors and are never retried.

use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Child, Command, Stdio};
use std::sync::Mutex;

use serde::Serialize;
use serde_json::{json, Value};

use super::{EvalError, Evaluation, Evaluator, LossReport, StateGraph, TrainExample};

pub const FEATURE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Transport {
    /// `host:port`
    Tcp(String),
    /// Command line run through `sh -c`.
    Exec(String),
}

struct Connection {
    reader: Box<dyn BufRead + Send>,
    writer: Box<dyn Write + Send>,
    child: Option<Child>,
}

impl Drop for Connection {
    fn drop(&mut self) {
        if let Some(child) = &mut self.child {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

impl Connection {
    fn open(transport: &Transport) -> Result<Connection, EvalError> {
        let transport_err = |e: std::io::Error| EvalError::Transport(e.to_string());
        match transport {
            Transport::Tcp(addr) => {
                let stream = TcpStream::connect(addr).map_err(transport_err)?;
                let reader = BufReader::new(stream.try_clone().map_err(transport_err)?);
                Ok(Connection {
                    reader: Box::new(reader),
                    writer: Box::new(stream),
                    child: None,
                })
            }
            Transport::Exec(cmd) => {
                let mut child = Command::new("sh")
                    .arg("-c")
                    .arg(cmd)
                    .stdin(Stdio::piped())
                    .stdout(Stdio::piped())
                    .stderr(Stdio::inherit())
                    .spawn()
                    .map_err(transport_err)?;
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                Ok(Connection {
                    reader: Box::new(BufReader::new(stdout)),
                    writer: Box::new(stdin),
                    child: Some(child),
                })
            }
        }
    }

    fn round_trip(&mut self, request: &Value) -> Result<Value, EvalError> {
        let mut line = serde_json::to_string(request).map_err(|e| EvalError::Protocol(e.to_string()))?;
        line.push('\n');
        let transport_err = |e: std::io::Error| EvalError::Transport(e.to_string());
        self.writer.write_all(line.as_bytes()).map_err(transport_err)?;
        self.writer.flush().map_err(transport_err)?;
        let mut reply = String::new();
        if self.reader.read_line(&mut reply).map_err(transport_err)? == 0 {
            return Err(EvalError::Transport("connection closed".into()));
        }
        let value: Value = serde_json::from_str(&reply).map_err(|e| EvalError::Protocol(format!("bad response: {e}")))?;
        if let Some(err) = value.get("error") {
            return Err(EvalError::Protocol(format!("evaluator reported error: {err}")));
        }
        Ok(value)
    }
}

pub struct ExternalEvaluator {
    transport: Transport,
    action_space: usize,
    retries: usize,
    name: Mutex<String>,
    conn: Mutex<Option<Connection>>,
}

#[derive(Serialize)]
struct WireExample<'a> {
    graph: &'a StateGraph,
    policy_target: &'a [f64],
    value_target: f64,
    value_weight: f64,
}

fn number(v: &Value, what: &str) -> Result<f64, EvalError> {
    v.as_f64()
        .filter(|x| x.is_finite())
        .ok_or_else(|| EvalError::Protocol(format!("{what}: expected a finite number")))
}

impl ExternalEvaluator {
    /// Connects and performs the handshake.
    pub fn connect(transport: Transport, action_space: usize, retries: usize) -> Result<ExternalEvaluator, EvalError> {
        let e = ExternalEvaluator {
            transport,
            action_space,
            retries,
            name: Mutex::new(String::new()),
            conn: Mutex::new(None),
        };
        e.request(&Value::Null, false, true)?;
        Ok(e)
    }

    fn hello(&self, conn: &mut Connection) -> Result<(), EvalError> {
        let reply = conn.round_trip(&json!({
            "cmd": "hello",
            "action_space": self.action_space,
            "feature_version": FEATURE_VERSION,
        }))?;
        if reply.get("ok") != Some(&Value::Bool(true)) {
            return Err(EvalError::Protocol("handshake refused".into()));
        }
        let name = reply.get("name").and_then(Value::as_str).unwrap_or("external");
        *self.name.lock().unwrap() = name.to_string();
        Ok(())
    }

    /// Sends `request` on the current connection, reconnecting on
    /// transport failures. `handshake_only` just establishes a session.
    fn request(&self, request: &Value, retry: bool, handshake_only: bool) -> Result<Value, EvalError> {
        let mut guard = self.conn.lock().unwrap();
        let attempts = if retry || handshake_only { self.retries + 1 } else { 1 };
        let mut last = EvalError::Transport("no attempt made".into());
        for attempt in 0..attempts {
            if guard.is_none() {
                let opened = Connection::open(&self.transport).and_then(|mut c| self.hello(&mut c).map(|_| c));
                match opened {
                    Ok(c) => *guard = Some(c),
                    Err(e) if e.is_retryable() => {
                        log::warn!("external evaluator connect attempt {} failed: {e}", attempt + 1);
                        last = e;
                        continue;
                    }
                    Err(e) => return Err(e),
                }
            }
            if handshake_only {
                return Ok(Value::Null);
            }
            match guard.as_mut().unwrap().round_trip(request) {
                Ok(v) => return Ok(v),
                Err(e) if e.is_retryable() => {
                    log::warn!("external evaluator request attempt {} failed: {e}", attempt + 1);
                    *guard = None;
                    last = e;
                }
                Err(e) => {
                    *guard = None;
                    return Err(e);
                }
            }
        }
        Err(last)
    }
}

impl Evaluator for ExternalEvaluator {
    fn name(&self) -> String {
        format!("external({})", self.name.lock().unwrap())
    }

    fn action_space(&self) -> usize {
        self.action_space
    }

    fn evaluate_batch(&self, graphs: &[StateGraph]) -> Result<Vec<Evaluation>, EvalError> {
        if graphs.is_empty() {
            return Err(EvalError::EmptyBatch);
        }
        let reply = self.request(&json!({"cmd": "eval", "graphs": graphs}), true, false)?;
        let values = reply
            .get("values")
            .and_then(Value::as_array)
            .ok_or_else(|| EvalError::Protocol("missing `values`".into()))?;
        let policies = reply
            .get("policies")
            .and_then(Value::as_array)
            .ok_or_else(|| EvalError::Protocol("missing `policies`".into()))?;
        if values.len() != graphs.len() || policies.len() != graphs.len() {
            return Err(EvalError::Protocol("response length differs from batch".into()));
        }
        values
            .iter()
            .zip(policies)
            .map(|(v, p)| {
                let value = number(v, "value")?;
                if !(-1.0..=1.0).contains(&value) {
                    return Err(EvalError::Protocol(format!("value {value} outside [-1, 1]")));
                }
                let p = p.as_array().ok_or_else(|| EvalError::Protocol("policy is not an array".into()))?;
                if p.len() != self.action_space {
                    return Err(EvalError::ActionSpace {
                        expected: self.action_space,
                        found: p.len(),
                    });
                }
                let mut policy = p.iter().map(|x| number(x, "policy entry")).collect::<Result<Vec<f64>, _>>()?;
                let sum: f64 = policy.iter().sum();
                if policy.iter().any(|x| *x < 0.0) || sum <= 0.0 {
                    return Err(EvalError::Protocol("policy is not a distribution".into()));
                }
                policy.iter_mut().for_each(|x| *x /= sum);
                Ok(Evaluation { value, policy })
            })
            .collect()
    }

    fn train_batch(&mut self, examples: &[TrainExample]) -> Result<LossReport, EvalError> {
        if examples.is_empty() {
            return Err(EvalError::EmptyBatch);
        }
        let wire: Vec<WireExample> = examples
            .iter()
            .map(|e| WireExample {
                graph: &e.graph,
                policy_target: &e.policy_target,
                value_target: e.value_target,
                value_weight: e.value_weight,
            })
            .collect();
        let reply = self.request(&json!({"cmd": "train", "examples": wire}), false, false)?;
        Ok(LossReport {
            policy_loss: number(reply.get("policy_loss").unwrap_or(&Value::Null), "policy_loss")?,
            value_loss: number(reply.get("value_loss").unwrap_or(&Value::Null), "value_loss")?,
        })
    }

    fn save_params(&self, path: &Path) -> Result<(), EvalError> {
        let reply = self.request(&json!({"cmd": "save", "path": path.display().to_string()}), true, false)?;
        ok_reply(&reply)
    }

    fn load_params(&mut self, path: &Path) -> Result<(), EvalError> {
        let reply = self.request(&json!({"cmd": "load", "path": path.display().to_string()}), true, false)?;
        ok_reply(&reply)
    }

    fn is_trainable(&self) -> bool {
        true
    }
}

fn ok_reply(reply: &Value) -> Result<(), EvalError> {
    if reply.get("ok") == Some(&Value::Bool(true)) {
        Ok(())
    } else {
        Err(EvalError::Protocol("expected {\"ok\":true}".into()))
    }
}
