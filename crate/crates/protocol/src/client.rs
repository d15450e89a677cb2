//! Blocking client with one outstanding request per connection.

use std::io::Write;
use std::time::{Duration, Instant};

use crate::codec::{decode_response, encode_request_flags, read_response_bytes, CodecError, Item, Response, Status};
use crate::transport::{Endpoint, Stream};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(30);

#[derive(Debug, thiserror::Error)]
pub enum ClientError {
    #[error("connect to {0} failed: {1}")]
    Connect(Endpoint, std::io::Error),
    #[error("request timed out")]
    Timeout,
    #[error("protocol violation: {0}")]
    ProtocolViolation(String),
    #[error("server error: {0}")]
    Server(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<CodecError> for ClientError {
    fn from(e: CodecError) -> Self {
        match e {
            CodecError::Io(m)
                if m.contains("timed out") || m.contains("would block") || m.contains("temporarily unavailable") =>
            {
                ClientError::Timeout
            }
            CodecError::Io(m) => ClientError::Io(m),
            other => ClientError::ProtocolViolation(other.to_string()),
        }
    }
}

pub struct Client {
    stream: Stream,
    next_id: u32,
    round_trips: u64,
}

impl Client {
    pub fn connect(ep: &Endpoint) -> Result<Self, ClientError> {
        Self::connect_with_timeout(ep, DEFAULT_TIMEOUT)
    }

    pub fn connect_with_timeout(ep: &Endpoint, timeout: Duration) -> Result<Self, ClientError> {
        let stream = Stream::connect(ep, timeout).map_err(|e| ClientError::Connect(ep.clone(), e))?;
        Ok(Self { stream, next_id: 1, round_trips: 0 })
    }

    /// Retries until the endpoint accepts or `within` elapses.
    pub fn connect_retry(ep: &Endpoint, within: Duration) -> Result<Self, ClientError> {
        let deadline = Instant::now() + within;
        loop {
            match Self::connect(ep) {
                Ok(c) => return Ok(c),
                Err(e) if Instant::now() >= deadline => return Err(e),
                Err(_) => std::thread::sleep(Duration::from_millis(20)),
            }
        }
    }

    pub fn round_trips(&self) -> u64 {
        self.round_trips
    }

    /// Sends pre-encoded request bytes and returns the raw response bytes.
    pub fn round_trip_raw(&mut self, request: &[u8]) -> Result<Vec<u8>, ClientError> {
        self.stream.write_all(request).map_err(|e| map_io(&e))?;
        self.stream.flush().map_err(|e| map_io(&e))?;
        let raw = read_response_bytes(&mut self.stream)?;
        self.round_trips += 1;
        Ok(raw)
    }

    pub fn request(&mut self, commands: &[impl AsRef<str>], batch: bool) -> Result<Response, ClientError> {
        if commands.is_empty() {
            return Err(ClientError::ProtocolViolation("no commands".into()));
        }
        if !batch && commands.len() != 1 {
            return Err(ClientError::ProtocolViolation("non-batch request must carry one command".into()));
        }
        let id = self.next_id;
        self.next_id = self.next_id.wrapping_add(1);
        let raw = self.round_trip_raw(&encode_request_flags(id, batch, commands))?;
        let resp = decode_response(&raw)?;
        if resp.status == Status::Error {
            return Err(ClientError::Server(resp.items.first().and_then(Item::text).unwrap_or("").to_string()));
        }
        if resp.id != id {
            return Err(ClientError::ProtocolViolation(format!("response id {} for request {id}", resp.id)));
        }
        if resp.items.len() != commands.len() {
            return Err(ClientError::ProtocolViolation(format!(
                "{} items for {} commands",
                resp.items.len(),
                commands.len()
            )));
        }
        Ok(resp)
    }

    pub fn batch(&mut self, commands: &[impl AsRef<str>]) -> Result<Vec<Item>, ClientError> {
        Ok(self.request(commands, true)?.items)
    }

    /// One command; item errors become `ClientError::Server`.
    pub fn call(&mut self, command: &str) -> Result<Item, ClientError> {
        let item = self.request(&[command], false)?.items.remove(0);
        if let Item::Text(t) = &item {
            if let Some(msg) = t.strip_prefix("error: ") {
                return Err(ClientError::Server(msg.to_string()));
            }
        }
        Ok(item)
    }

    pub fn text(&mut self, command: &str) -> Result<String, ClientError> {
        match self.call(command)? {
            Item::Text(t) => Ok(t),
            Item::Frame { .. } => Err(ClientError::ProtocolViolation("expected text, got frame".into())),
        }
    }
}

fn map_io(e: &std::io::Error) -> ClientError {
    match e.kind() {
        std::io::ErrorKind::TimedOut | std::io::ErrorKind::WouldBlock => ClientError::Timeout,
        _ => ClientError::Io(e.to_string()),
    }
}
