use std::io::{self, BufReader, Read, Write};
use std::net::{TcpStream, ToSocketAddrs};

use thiserror::Error;

use super::frame::{parse_frame, write_envelope, FrameError};
use super::message::RpcEnvelope;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("connection closed")]
    Closed,
    #[error(transparent)]
    Frame(#[from] FrameError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// A bidirectional message channel to a (possibly simulated) Lean server.
///
/// Writes are whole frames. Responses to distinct request ids may arrive in
/// any order.
pub trait Connection {
    fn send(&mut self, message: &RpcEnvelope) -> Result<(), TransportError>;

    /// Blocks until the next message from the peer arrives.
    fn recv(&mut self) -> Result<RpcEnvelope, TransportError>;

    /// The peer's virtual clock, when it publishes one.
    fn virtual_now(&self) -> Option<f64> {
        None
    }

    /// Peak memory observed by the peer, when it can report one.
    fn peak_memory_gb(&self) -> Option<f64> {
        None
    }
}

/// Framed messages over any byte stream (TCP, pipes, stdio).
pub struct StreamConnection<R: Read, W: Write> {
    reader: BufReader<R>,
    writer: W,
    last_virtual_time: Option<f64>,
}

impl<R: Read, W: Write> StreamConnection<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self {
            reader: BufReader::new(reader),
            writer,
            last_virtual_time: None,
        }
    }
}

impl StreamConnection<TcpStream, TcpStream> {
    pub fn connect_tcp(addr: impl ToSocketAddrs) -> io::Result<Self> {
        let stream = TcpStream::connect(addr)?;
        stream.set_nodelay(true)?;
        let reader = stream.try_clone()?;
        Ok(Self::new(reader, stream))
    }
}

impl<R: Read, W: Write> Connection for StreamConnection<R, W> {
    fn send(&mut self, message: &RpcEnvelope) -> Result<(), TransportError> {
        write_envelope(&mut self.writer, message).map_err(|e| match e.kind() {
            io::ErrorKind::BrokenPipe | io::ErrorKind::ConnectionReset => TransportError::Closed,
            _ => TransportError::Io(e),
        })
    }

    fn recv(&mut self) -> Result<RpcEnvelope, TransportError> {
        let envelope = parse_frame(&mut self.reader).map_err(|e| match e {
            FrameError::Closed => TransportError::Closed,
            other => TransportError::Frame(other),
        })?;
        if let RpcEnvelope::Response(resp) = &envelope {
            if resp.virtual_time.is_some() {
                self.last_virtual_time = resp.virtual_time;
            }
        }
        Ok(envelope)
    }

    fn virtual_now(&self) -> Option<f64> {
        self.last_virtual_time
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wireproto::frame::frame_message;
    use crate::wireproto::message::{encode_request, Response, PING};
    use serde_json::json;

    #[test]
    fn stream_connection_writes_frames_and_tracks_virtual_time() {
        let reply = RpcEnvelope::Response(Response {
            id: 1.into(),
            outcome: Ok(json!({"ok": true})),
            virtual_time: Some(4.25),
        });
        let incoming = frame_message(&reply.to_json());
        let mut conn = StreamConnection::new(&incoming[..], Vec::new());
        let request = encode_request(PING, json!({}), 1).unwrap();
        conn.send(&request).unwrap();
        assert_eq!(conn.writer, frame_message(&request.to_json()));
        assert_eq!(conn.virtual_now(), None);
        assert_eq!(conn.recv().unwrap(), reply);
        assert_eq!(conn.virtual_now(), Some(4.25));
        assert!(matches!(conn.recv(), Err(TransportError::Closed)));
    }
}
