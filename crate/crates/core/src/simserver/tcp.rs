use std::io::{self, BufReader};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{self, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use crate::wireproto::{parse_frame, write_envelope, FrameError, RpcEnvelope};

use super::server::SimServer;

/// Default wall-clock pause after which the server assumes the client has
/// sent everything it will send at the current virtual instant.
pub const DEFAULT_QUIET: Duration = Duration::from_millis(10);

/// Serves one connection until the peer hangs up. Incoming frames are
/// applied at the current virtual time; virtual time advances to the next
/// reply only after `quiet` passes with no incoming frame.
pub fn serve_connection(stream: TcpStream, mut server: SimServer, quiet: Duration) -> io::Result<SimServer> {
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let (tx, rx) = mpsc::channel();
    let reader = thread::spawn(move || {
        let mut reader = BufReader::new(stream);
        loop {
            let frame = parse_frame(&mut reader);
            let stop = matches!(
                frame,
                Err(FrameError::Closed | FrameError::Io(_) | FrameError::MalformedHeader(_) | FrameError::TruncatedBody { .. })
            );
            if tx.send(frame).is_err() || stop {
                break;
            }
        }
    });

    loop {
        let incoming = if server.has_pending() {
            rx.recv_timeout(quiet)
        } else {
            rx.recv().map_err(|_| RecvTimeoutError::Disconnected)
        };
        match incoming {
            Ok(Ok(message)) => server.submit(message),
            // an undecodable body has no usable id; skip it
            Ok(Err(FrameError::DecodeError(_))) => {}
            Ok(Err(_)) | Err(RecvTimeoutError::Disconnected) => break,
            Err(RecvTimeoutError::Timeout) => {
                if let Some(response) = server.next_output() {
                    write_envelope(&mut writer, &RpcEnvelope::Response(response))?;
                }
            }
        }
    }
    let _ = reader.join();
    Ok(server)
}

/// Accepts connections forever (or `limit` times), each with a fresh server
/// from `make_server`: one theorem session per connection.
pub fn serve_tcp<F>(listener: TcpListener, make_server: F, quiet: Duration, limit: Option<usize>) -> io::Result<()>
where
    F: Fn() -> SimServer,
{
    let mut handles = Vec::new();
    for (served, stream) in listener.incoming().enumerate() {
        let stream = stream?;
        let server = make_server();
        handles.push(thread::spawn(move || serve_connection(stream, server, quiet)));
        if limit.is_some_and(|n| served + 1 >= n) {
            break;
        }
    }
    for handle in handles {
        handle
            .join()
            .map_err(|_| io::Error::other("session thread panicked"))??;
    }
    Ok(())
}
