use std::collections::HashMap;

use serde_json::Value;
use thiserror::Error;

use crate::wireproto::{
    encode_notification, encode_request, Connection, ProtocolError, RequestId, Response,
    RpcEnvelope, RpcError, TransportError,
};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error("{method} failed: {error}")]
    Rpc { method: String, error: RpcError },
}

/// Request/response bookkeeping over a [`Connection`]. Ids are consecutive
/// integers starting at 1. Responses that arrive for other outstanding
/// requests are held until asked for.
pub struct RpcClient<'c, C: Connection + ?Sized> {
    conn: &'c mut C,
    next_id: i64,
    held: HashMap<RequestId, Response>,
    latest_virtual_time: Option<f64>,
}

impl<'c, C: Connection + ?Sized> RpcClient<'c, C> {
    pub fn new(conn: &'c mut C) -> Self {
        Self {
            conn,
            next_id: 1,
            held: HashMap::new(),
            latest_virtual_time: None,
        }
    }

    pub fn connection(&self) -> &C {
        self.conn
    }

    /// Largest `virtualTime` seen on any response so far.
    pub fn latest_virtual_time(&self) -> Option<f64> {
        self.latest_virtual_time
    }

    pub fn notify(&mut self, method: &str, params: Value) -> Result<(), ClientError> {
        let message = encode_notification(method, params)?;
        self.conn.send(&message)?;
        Ok(())
    }

    /// Sends a request without waiting; returns its id.
    pub fn send(&mut self, method: &str, params: Value) -> Result<i64, ClientError> {
        let id = self.next_id;
        let message = encode_request(method, params, id)?;
        self.next_id += 1;
        self.conn.send(&message)?;
        Ok(id)
    }

    /// Next response from the peer, in arrival order.
    pub fn recv_any(&mut self) -> Result<Response, ClientError> {
        if let Some(key) = self.held.keys().min().cloned() {
            return Ok(self.held.remove(&key).expect("key was just listed"));
        }
        loop {
            match self.conn.recv()? {
                RpcEnvelope::Response(response) => {
                    self.observe(&response);
                    return Ok(response);
                }
                // server-initiated traffic is not part of this protocol
                RpcEnvelope::Request(_) | RpcEnvelope::Notification(_) => continue,
            }
        }
    }

    /// Blocks until the response to `id` arrives.
    pub fn wait_for(&mut self, id: i64) -> Result<Response, ClientError> {
        let key = RequestId::Int(id);
        if let Some(response) = self.held.remove(&key) {
            return Ok(response);
        }
        loop {
            match self.conn.recv()? {
                RpcEnvelope::Response(response) => {
                    self.observe(&response);
                    if response.id == key {
                        return Ok(response);
                    }
                    self.held.insert(response.id.clone(), response);
                }
                RpcEnvelope::Request(_) | RpcEnvelope::Notification(_) => continue,
            }
        }
    }

    /// Request and wait, retrying once on any failure.
    pub fn call(&mut self, method: &str, params: Value) -> Result<Value, ClientError> {
        match self.call_once(method, params.clone()) {
            Ok(v) => Ok(v),
            Err(ClientError::Protocol(e)) => Err(ClientError::Protocol(e)),
            Err(_) => self.call_once(method, params),
        }
    }

    fn call_once(&mut self, method: &str, params: Value) -> Result<Value, ClientError> {
        let id = self.send(method, params)?;
        let response = self.wait_for(id)?;
        response.outcome.map_err(|error| ClientError::Rpc {
            method: method.to_string(),
            error,
        })
    }

    fn observe(&mut self, response: &Response) {
        if let Some(t) = response.virtual_time {
            self.latest_virtual_time = Some(self.latest_virtual_time.map_or(t, |v| v.max(t)));
        }
    }
}
