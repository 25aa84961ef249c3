//! JSON-RPC 2.0 envelopes and the typed payloads of the snapshot methods.

use std::fmt;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::frame::FrameError;

pub const PING: &str = "$/lean/dspSnapshotPing";
pub const CAPTURE: &str = "$/lean/dspSnapshotCapture";
pub const BRANCH: &str = "$/lean/dspSnapshotBranch";
pub const DID_OPEN: &str = "textDocument/didOpen";

/// Methods a client may encode. Everything else is rejected up front.
pub const KNOWN_METHODS: [&str; 4] = [PING, CAPTURE, BRANCH, DID_OPEN];

pub mod codes {
    pub const PARSE_ERROR: i64 = -32700;
    pub const INVALID_REQUEST: i64 = -32600;
    pub const METHOD_NOT_FOUND: i64 = -32601;
    pub const INVALID_PARAMS: i64 = -32602;
    pub const DOCUMENT_NOT_OPEN: i64 = -32001;
    pub const POSITION_NOT_A_SORRY: i64 = -32002;
    pub const UNKNOWN_SNAPSHOT: i64 = -32003;
    pub const UNKNOWN_DOCUMENT: i64 = -32004;
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RequestId {
    Int(i64),
    Str(String),
}

impl fmt::Display for RequestId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RequestId::Int(i) => write!(f, "{i}"),
            RequestId::Str(s) => write!(f, "{s:?}"),
        }
    }
}

impl From<i64> for RequestId {
    fn from(value: i64) -> Self {
        RequestId::Int(value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Error)]
#[error("rpc error {code}: {message}")]
pub struct RpcError {
    pub code: i64,
    pub message: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<Value>,
}

impl RpcError {
    pub fn new(code: i64, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
            data: None,
        }
    }

    pub fn method_not_found(method: &str) -> Self {
        Self::new(codes::METHOD_NOT_FOUND, format!("method not found: {method}"))
    }

    pub fn is_method_not_found(&self) -> bool {
        self.code == codes::METHOD_NOT_FOUND
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Request {
    pub id: RequestId,
    pub method: String,
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Notification {
    pub method: String,
    pub params: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    pub id: RequestId,
    pub outcome: Result<Value, RpcError>,
    /// Peer clock at the moment the response was emitted. Only the simulator
    /// sets it; other peers omit the field and readers ignore its absence.
    pub virtual_time: Option<f64>,
}

/// One JSON-RPC message as it travels on the wire.
#[derive(Debug, Clone, PartialEq)]
pub enum RpcEnvelope {
    Request(Request),
    Notification(Notification),
    Response(Response),
}

#[derive(Serialize, Deserialize)]
struct RawEnvelope {
    jsonrpc: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    id: Option<RequestId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    method: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    error: Option<RpcError>,
    #[serde(
        rename = "virtualTime",
        default,
        skip_serializing_if = "Option::is_none"
    )]
    virtual_time: Option<f64>,
}

impl RpcEnvelope {
    pub fn method(&self) -> Option<&str> {
        match self {
            RpcEnvelope::Request(r) => Some(&r.method),
            RpcEnvelope::Notification(n) => Some(&n.method),
            RpcEnvelope::Response(_) => None,
        }
    }

    pub fn id(&self) -> Option<&RequestId> {
        match self {
            RpcEnvelope::Request(r) => Some(&r.id),
            RpcEnvelope::Response(r) => Some(&r.id),
            RpcEnvelope::Notification(_) => None,
        }
    }

    pub fn response(id: RequestId, outcome: Result<Value, RpcError>) -> Self {
        RpcEnvelope::Response(Response {
            id,
            outcome,
            virtual_time: None,
        })
    }

    pub fn to_json(&self) -> Vec<u8> {
        let raw = match self {
            RpcEnvelope::Request(r) => RawEnvelope {
                jsonrpc: "2.0".into(),
                id: Some(r.id.clone()),
                method: Some(r.method.clone()),
                params: Some(r.params.clone()),
                result: None,
                error: None,
                virtual_time: None,
            },
            RpcEnvelope::Notification(n) => RawEnvelope {
                jsonrpc: "2.0".into(),
                id: None,
                method: Some(n.method.clone()),
                params: Some(n.params.clone()),
                result: None,
                error: None,
                virtual_time: None,
            },
            RpcEnvelope::Response(r) => {
                let (result, error) = match &r.outcome {
                    Ok(v) => (Some(v.clone()), None),
                    Err(e) => (None, Some(e.clone())),
                };
                RawEnvelope {
                    jsonrpc: "2.0".into(),
                    id: Some(r.id.clone()),
                    method: None,
                    params: None,
                    result,
                    error,
                    virtual_time: r.virtual_time,
                }
            }
        };
        serde_json::to_vec(&raw).expect("envelope serialization is infallible")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, FrameError> {
        let raw: RawEnvelope =
            serde_json::from_slice(bytes).map_err(|e| FrameError::DecodeError(e.to_string()))?;
        match (raw.method, raw.id) {
            (Some(method), Some(id)) => Ok(RpcEnvelope::Request(Request {
                id,
                method,
                params: raw.params.unwrap_or(Value::Null),
            })),
            (Some(method), None) => Ok(RpcEnvelope::Notification(Notification {
                method,
                params: raw.params.unwrap_or(Value::Null),
            })),
            (None, Some(id)) => {
                let outcome = match raw.error {
                    Some(e) => Err(e),
                    None => Ok(raw.result.unwrap_or(Value::Null)),
                };
                Ok(RpcEnvelope::Response(Response {
                    id,
                    outcome,
                    virtual_time: raw.virtual_time,
                }))
            }
            (None, None) => Err(FrameError::DecodeError(
                "message has neither method nor id".into(),
            )),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ProtocolError {
    #[error("unknown method {0:?}")]
    UnknownMethod(String),
}

fn check_method(method: &str) -> Result<(), ProtocolError> {
    if KNOWN_METHODS.contains(&method) {
        Ok(())
    } else {
        Err(ProtocolError::UnknownMethod(method.to_string()))
    }
}

/// Builds a request envelope, rejecting methods outside the snapshot protocol.
pub fn encode_request(method: &str, params: Value, id: i64) -> Result<RpcEnvelope, ProtocolError> {
    check_method(method)?;
    Ok(RpcEnvelope::Request(Request {
        id: RequestId::Int(id),
        method: method.to_string(),
        params,
    }))
}

pub fn encode_notification(method: &str, params: Value) -> Result<RpcEnvelope, ProtocolError> {
    check_method(method)?;
    Ok(RpcEnvelope::Notification(Notification {
        method: method.to_string(),
        params,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PingResult {
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptureParams {
    pub uri: String,
    pub line: u32,
    pub character: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct CaptureResult {
    pub snapshot_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BranchConfig {
    pub tactic: String,
}

impl BranchConfig {
    pub fn new(tactic: impl Into<String>) -> Self {
        Self {
            tactic: tactic.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BranchParams {
    pub snapshot_id: String,
    pub configs: Vec<BranchConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BranchResult {
    pub ok: bool,
    pub error: Option<String>,
    pub cpu_seconds: f64,
}

impl BranchResult {
    pub fn closed(cpu_seconds: f64) -> Self {
        Self {
            ok: true,
            error: None,
            cpu_seconds,
        }
    }

    pub fn failed(message: impl Into<String>, cpu_seconds: f64) -> Self {
        Self {
            ok: false,
            error: Some(message.into()),
            cpu_seconds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TextDocumentItem {
    pub uri: String,
    pub language_id: String,
    pub version: i32,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DidOpenParams {
    pub text_document: TextDocumentItem,
}

impl DidOpenParams {
    pub fn lean(uri: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            text_document: TextDocumentItem {
                uri: uri.into(),
                language_id: "lean4".into(),
                version: 1,
                text: text.into(),
            },
        }
    }
}
