//! LSP-framed JSON-RPC for the three snapshot methods.
//!
//! The codec is stateless. [`frame`] handles the `Content-Length` base
//! protocol, [`message`] the envelopes and typed payloads, and [`transport`]
//! the [`Connection`] abstraction shared by the in-process pipe and TCP.

pub mod frame;
pub mod message;
pub mod transport;

pub use frame::{frame_message, parse_frame, read_frame, write_envelope, FrameError};
pub use message::{
    codes, encode_notification, encode_request, BranchConfig, BranchParams, BranchResult,
    CaptureParams, CaptureResult, DidOpenParams, Notification, PingResult, ProtocolError,
    Request, RequestId, Response, RpcEnvelope, RpcError, BRANCH, CAPTURE, DID_OPEN, PING,
};
pub use transport::{Connection, StreamConnection, TransportError};
