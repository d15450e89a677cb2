//! Threaded server: one handler thread per connection, one shared command queue.

use std::io::{self, Write};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;
use std::time::Duration;

use crate::codec::{decode_request, encode_response, read_request_bytes, CodecError, Item, Response, Status};
use crate::host::SharedHost;
use crate::transport::{Endpoint, Listener, Stream};

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("endpoint {endpoint} unavailable: {source}")]
    EndpointUnavailable { endpoint: Endpoint, source: io::Error },
}

/// Executes one raw request against the host and returns the response bytes.
pub fn handle_request_bytes(host: &SharedHost, raw: &[u8]) -> Vec<u8> {
    let resp = match decode_request(raw) {
        Err(e) => {
            Response { id: request_id_hint(raw), status: Status::Error, items: vec![Item::Text(format!("error: {e}"))] }
        }
        Ok(req) => {
            let mut guard = host.lock();
            let mut failed = false;
            let items = req
                .commands
                .iter()
                .map(|c| match guard.execute(c) {
                    Ok(item) => item,
                    Err(msg) => {
                        failed = true;
                        Item::Text(format!("error: {msg}"))
                    }
                })
                .collect();
            drop(guard);
            Response { id: req.id, status: if failed { Status::Partial } else { Status::Ok }, items }
        }
    };
    encode_response(&resp)
}

fn request_id_hint(raw: &[u8]) -> u32 {
    raw.get(4..8).map_or(0, |b| u32::from_le_bytes(b.try_into().unwrap()))
}

fn serve_connection(host: Arc<SharedHost>, mut stream: Stream, stop: Arc<AtomicBool>) {
    while !stop.load(Ordering::SeqCst) {
        let raw = match read_request_bytes(&mut stream) {
            Ok(raw) => raw,
            Err(CodecError::Truncated) | Err(CodecError::Io(_)) => return,
            Err(e) => {
                // framing is lost; report and close
                let resp = Response { id: 0, status: Status::Error, items: vec![Item::Text(format!("error: {e}"))] };
                let _ = stream.write_all(&encode_response(&resp));
                return;
            }
        };
        let out = handle_request_bytes(&host, &raw);
        if stream.write_all(&out).and_then(|_| stream.flush()).is_err() {
            return;
        }
    }
}

pub struct ServerHandle {
    endpoint: Endpoint,
    host: Arc<SharedHost>,
    stop: Arc<AtomicBool>,
    conns: Arc<Mutex<Vec<Stream>>>,
    accept: Option<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn endpoint(&self) -> &Endpoint {
        &self.endpoint
    }

    pub fn host(&self) -> &Arc<SharedHost> {
        &self.host
    }

    pub fn shutdown(mut self) {
        self.stop_now();
    }

    fn stop_now(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        // wake the blocking accept
        let _ = Stream::connect(&self.endpoint, Duration::from_millis(200));
        for c in self.conns.lock().unwrap_or_else(|p| p.into_inner()).drain(..) {
            c.shutdown();
        }
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    /// Blocks until the accept loop ends.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if self.accept.is_some() {
            self.stop_now();
        }
    }
}

pub fn serve(host: Arc<SharedHost>, endpoint: &Endpoint) -> Result<ServerHandle, ServerError> {
    let listener = Listener::bind(endpoint)
        .map_err(|source| ServerError::EndpointUnavailable { endpoint: endpoint.clone(), source })?;
    let endpoint = listener
        .endpoint()
        .map_err(|source| ServerError::EndpointUnavailable { endpoint: endpoint.clone(), source })?;
    let stop = Arc::new(AtomicBool::new(false));
    let conns: Arc<Mutex<Vec<Stream>>> = Arc::new(Mutex::new(Vec::new()));
    let accept = {
        let (host, stop, conns) = (host.clone(), stop.clone(), conns.clone());
        std::thread::spawn(move || {
            while !stop.load(Ordering::SeqCst) {
                let Ok(stream) = listener.accept() else { continue };
                if stop.load(Ordering::SeqCst) {
                    break;
                }
                if let Ok(c) = stream.try_clone() {
                    conns.lock().unwrap_or_else(|p| p.into_inner()).push(c);
                }
                let (host, stop) = (host.clone(), stop.clone());
                std::thread::spawn(move || serve_connection(host, stream, stop));
            }
        })
    };
    Ok(ServerHandle { endpoint, host, stop, conns, accept: Some(accept) })
}
