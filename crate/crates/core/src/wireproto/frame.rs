//! LSP base-protocol framing: `Content-Length: <n>\r\n\r\n<body>`.

use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

use super::message::RpcEnvelope;

const CONTENT_LENGTH: &str = "content-length";

/// Upper bound on a single header line; anything longer is not a header.
const MAX_HEADER_LINE: usize = 8 * 1024;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("truncated body: expected {expected} bytes, got {actual}")]
    TruncatedBody { expected: usize, actual: usize },
    #[error("cannot decode message body: {0}")]
    DecodeError(String),
    /// The stream ended cleanly at a frame boundary.
    #[error("stream closed")]
    Closed,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Wraps a serialized payload in a `Content-Length` header.
pub fn frame_message(payload: &[u8]) -> Vec<u8> {
    let header = format!("Content-Length: {}\r\n\r\n", payload.len());
    let mut out = Vec::with_capacity(header.len() + payload.len());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(payload);
    out
}

/// Reads exactly one framed payload from `reader`.
///
/// Header names are matched case-insensitively and headers other than
/// `Content-Length` (e.g. `Content-Type`) are skipped. A bare `\n` line
/// terminator is tolerated on input; output always uses `\r\n`.
pub fn read_frame<R: BufRead>(reader: &mut R) -> Result<Vec<u8>, FrameError> {
    let mut content_length: Option<usize> = None;
    let mut line = Vec::new();
    let mut first = true;
    loop {
        line.clear();
        let n = reader
            .by_ref()
            .take(MAX_HEADER_LINE as u64)
            .read_until(b'\n', &mut line)?;
        if n == 0 {
            if first {
                return Err(FrameError::Closed);
            }
            return Err(FrameError::MalformedHeader(
                "stream ended inside the header block".into(),
            ));
        }
        first = false;
        if line.last() != Some(&b'\n') {
            return Err(FrameError::MalformedHeader("header line too long".into()));
        }
        let text = std::str::from_utf8(&line)
            .map_err(|_| FrameError::MalformedHeader("header is not UTF-8".into()))?
            .trim_end_matches(['\r', '\n']);
        if text.is_empty() {
            break;
        }
        let (name, value) = text
            .split_once(':')
            .ok_or_else(|| FrameError::MalformedHeader(format!("not a header line: {text:?}")))?;
        if name.trim().eq_ignore_ascii_case(CONTENT_LENGTH) {
            let value = value.trim();
            let len = value.parse::<usize>().map_err(|_| {
                FrameError::MalformedHeader(format!("invalid Content-Length {value:?}"))
            })?;
            content_length = Some(len);
        }
    }
    let expected = content_length
        .ok_or_else(|| FrameError::MalformedHeader("missing Content-Length".into()))?;

    let mut body = Vec::with_capacity(expected);
    let actual = reader.by_ref().take(expected as u64).read_to_end(&mut body)?;
    if actual < expected {
        return Err(FrameError::TruncatedBody { expected, actual });
    }
    Ok(body)
}

/// Reads one frame and decodes it into an envelope.
pub fn parse_frame<R: BufRead>(reader: &mut R) -> Result<RpcEnvelope, FrameError> {
    let body = read_frame(reader)?;
    RpcEnvelope::from_json(&body)
}

/// Serializes and frames an envelope, writing it in a single call.
pub fn write_envelope<W: Write>(writer: &mut W, envelope: &RpcEnvelope) -> io::Result<()> {
    writer.write_all(&frame_message(&envelope.to_json()))?;
    writer.flush()
}
