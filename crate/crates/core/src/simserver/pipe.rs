use crate::wireproto::{
    frame_message, parse_frame, Connection, RpcEnvelope, TransportError,
};

use super::server::SimServer;

/// In-process byte pipe to a [`SimServer`]. Every message is framed and
/// parsed on the way through, so the codec is exercised exactly as on a
/// socket. Receiving from an idle server reports a closed connection rather
/// than blocking forever.
pub struct SimPipe {
    server: SimServer,
    drop_after: Option<usize>,
    sent: usize,
    closed: bool,
}

impl SimPipe {
    pub fn new(server: SimServer) -> Self {
        Self {
            server,
            drop_after: None,
            sent: 0,
            closed: false,
        }
    }

    /// Fault injection: the connection drops once `frames` messages have been
    /// delivered to the server.
    pub fn drop_after(mut self, frames: usize) -> Self {
        self.drop_after = Some(frames);
        self
    }

    pub fn server(&self) -> &SimServer {
        &self.server
    }

    pub fn server_mut(&mut self) -> &mut SimServer {
        &mut self.server
    }

    pub fn into_server(self) -> SimServer {
        self.server
    }

    fn through_codec(message: &RpcEnvelope) -> Result<RpcEnvelope, TransportError> {
        let bytes = frame_message(&message.to_json());
        Ok(parse_frame(&mut bytes.as_slice())?)
    }
}

impl Connection for SimPipe {
    fn send(&mut self, message: &RpcEnvelope) -> Result<(), TransportError> {
        if self.closed || self.drop_after.is_some_and(|n| self.sent >= n) {
            self.closed = true;
            return Err(TransportError::Closed);
        }
        let decoded = Self::through_codec(message)?;
        self.server.submit(decoded);
        self.sent += 1;
        Ok(())
    }

    fn recv(&mut self) -> Result<RpcEnvelope, TransportError> {
        if self.closed || self.drop_after.is_some_and(|n| self.sent >= n) {
            self.closed = true;
            return Err(TransportError::Closed);
        }
        let response = self.server.next_output().ok_or(TransportError::Closed)?;
        Self::through_codec(&RpcEnvelope::Response(response))
    }

    fn virtual_now(&self) -> Option<f64> {
        Some(self.server.now())
    }

    fn peak_memory_gb(&self) -> Option<f64> {
        Some(self.server.memory_peak())
    }
}
