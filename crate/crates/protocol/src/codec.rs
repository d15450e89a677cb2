//! Length-prefixed request and response frames.
//!
//! Request:  `"UZP1" id:u32 flags:u8 count:u32 { len:u32 bytes }*`
//! Response: `"UZR1" id:u32 status:u8 count:u32 { kind:u8 [modality:u8 w:u32 h:u32] len:u32 bytes }*`
//!
//! All integers are little-endian.

use std::io::{self, Read};

pub const REQUEST_MAGIC: &[u8; 4] = b"UZP1";
pub const RESPONSE_MAGIC: &[u8; 4] = b"UZR1";
/// Largest declared item length accepted.
pub const MAX_ITEM_LEN: u32 = 16 * 1024 * 1024;
pub const FLAG_BATCH: u8 = 0b1;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CodecError {
    #[error("bad magic {0:?}")]
    BadMagic([u8; 4]),
    #[error("declared length {0} exceeds the 16 MiB cap")]
    Oversize(u32),
    #[error("frame truncated")]
    Truncated,
    #[error("{0} trailing bytes after frame")]
    TrailingBytes(usize),
    #[error("command is not valid UTF-8")]
    InvalidUtf8,
    #[error("request carries no commands")]
    Empty,
    #[error("single-command frame declares {0} commands")]
    CountMismatch(u32),
    #[error("unknown item kind {0}")]
    UnknownKind(u8),
    #[error("unknown status {0}")]
    UnknownStatus(u8),
    #[error("i/o: {0}")]
    Io(String),
}

impl From<io::Error> for CodecError {
    fn from(e: io::Error) -> Self {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            CodecError::Truncated
        } else {
            CodecError::Io(e.to_string())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Request {
    pub id: u32,
    pub batch: bool,
    pub commands: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok = 0,
    Partial = 1,
    Error = 2,
}

impl Status {
    fn from_u8(v: u8) -> Result<Self, CodecError> {
        match v {
            0 => Ok(Status::Ok),
            1 => Ok(Status::Partial),
            2 => Ok(Status::Error),
            other => Err(CodecError::UnknownStatus(other)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Item {
    Text(String),
    Frame { modality: u8, width: u32, height: u32, payload: Vec<u8> },
}

impl Item {
    pub fn text(&self) -> Option<&str> {
        match self {
            Item::Text(t) => Some(t),
            Item::Frame { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub id: u32,
    pub status: Status,
    pub items: Vec<Item>,
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

/// Encodes a request; more than one command implies the batch flag.
pub fn encode_request(id: u32, commands: &[impl AsRef<str>]) -> Vec<u8> {
    encode_request_flags(id, commands.len() > 1, commands)
}

pub fn encode_request_flags(id: u32, batch: bool, commands: &[impl AsRef<str>]) -> Vec<u8> {
    let body: usize = commands.iter().map(|c| 4 + c.as_ref().len()).sum();
    let mut out = Vec::with_capacity(13 + body);
    out.extend_from_slice(REQUEST_MAGIC);
    put_u32(&mut out, id);
    out.push(if batch { FLAG_BATCH } else { 0 });
    put_u32(&mut out, commands.len() as u32);
    for c in commands {
        let b = c.as_ref().as_bytes();
        put_u32(&mut out, b.len() as u32);
        out.extend_from_slice(b);
    }
    out
}

pub fn encode_response(r: &Response) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(RESPONSE_MAGIC);
    put_u32(&mut out, r.id);
    out.push(r.status as u8);
    put_u32(&mut out, r.items.len() as u32);
    for item in &r.items {
        match item {
            Item::Text(t) => {
                out.push(0);
                put_u32(&mut out, t.len() as u32);
                out.extend_from_slice(t.as_bytes());
            }
            Item::Frame { modality, width, height, payload } => {
                out.push(1);
                out.push(*modality);
                put_u32(&mut out, *width);
                put_u32(&mut out, *height);
                put_u32(&mut out, payload.len() as u32);
                out.extend_from_slice(payload);
            }
        }
    }
    out
}

/// Reads exactly one frame from a stream and returns its raw bytes.
struct Reader<'a, R: Read> {
    src: &'a mut R,
    raw: Vec<u8>,
}

impl<'a, R: Read> Reader<'a, R> {
    fn take(&mut self, n: usize) -> Result<&[u8], CodecError> {
        let start = self.raw.len();
        self.raw.resize(start + n, 0);
        self.src.read_exact(&mut self.raw[start..])?;
        Ok(&self.raw[start..])
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize, CodecError> {
        let n = self.u32()?;
        if n > MAX_ITEM_LEN {
            return Err(CodecError::Oversize(n));
        }
        Ok(n as usize)
    }

    fn magic(&mut self, want: &[u8; 4]) -> Result<(), CodecError> {
        let m: [u8; 4] = self.take(4)?.try_into().unwrap();
        if &m != want {
            return Err(CodecError::BadMagic(m));
        }
        Ok(())
    }
}

/// Reads one request frame from a byte stream, returning the raw bytes.
pub fn read_request_bytes(src: &mut impl Read) -> Result<Vec<u8>, CodecError> {
    let mut r = Reader { src, raw: Vec::with_capacity(64) };
    r.magic(REQUEST_MAGIC)?;
    r.u32()?;
    r.u8()?;
    let count = r.u32()?;
    for _ in 0..count {
        let n = r.len()?;
        r.take(n)?;
    }
    Ok(r.raw)
}

/// Reads one response frame from a byte stream, returning the raw bytes.
pub fn read_response_bytes(src: &mut impl Read) -> Result<Vec<u8>, CodecError> {
    let mut r = Reader { src, raw: Vec::with_capacity(64) };
    r.magic(RESPONSE_MAGIC)?;
    r.u32()?;
    r.u8()?;
    let count = r.u32()?;
    for _ in 0..count {
        match r.u8()? {
            0 => {}
            1 => {
                r.take(9)?;
            }
            k => return Err(CodecError::UnknownKind(k)),
        }
        let n = r.len()?;
        r.take(n)?;
    }
    Ok(r.raw)
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        let end = self.pos.checked_add(n).ok_or(CodecError::Truncated)?;
        let s = self.buf.get(self.pos..end).ok_or(CodecError::Truncated)?;
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize, CodecError> {
        let n = self.u32()?;
        if n > MAX_ITEM_LEN {
            return Err(CodecError::Oversize(n));
        }
        Ok(n as usize)
    }

    fn magic(&mut self, want: &[u8; 4]) -> Result<(), CodecError> {
        let m: [u8; 4] = self.take(4)?.try_into().unwrap();
        if &m != want {
            return Err(CodecError::BadMagic(m));
        }
        Ok(())
    }

    fn finish(&self) -> Result<(), CodecError> {
        match self.buf.len() - self.pos {
            0 => Ok(()),
            n => Err(CodecError::TrailingBytes(n)),
        }
    }
}

pub fn decode_request(bytes: &[u8]) -> Result<Request, CodecError> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    c.magic(REQUEST_MAGIC)?;
    let id = c.u32()?;
    let batch = c.u8()? & FLAG_BATCH != 0;
    let count = c.u32()?;
    if count == 0 {
        return Err(CodecError::Empty);
    }
    if !batch && count != 1 {
        return Err(CodecError::CountMismatch(count));
    }
    let mut commands = Vec::new();
    for _ in 0..count {
        let n = c.len()?;
        let s = std::str::from_utf8(c.take(n)?).map_err(|_| CodecError::InvalidUtf8)?;
        commands.push(s.to_string());
    }
    c.finish()?;
    Ok(Request { id, batch, commands })
}

pub fn decode_response(bytes: &[u8]) -> Result<Response, CodecError> {
    let mut c = Cursor { buf: bytes, pos: 0 };
    c.magic(RESPONSE_MAGIC)?;
    let id = c.u32()?;
    let status = Status::from_u8(c.u8()?)?;
    let count = c.u32()?;
    let mut items = Vec::new();
    for _ in 0..count {
        let item = match c.u8()? {
            0 => {
                let n = c.len()?;
                Item::Text(std::str::from_utf8(c.take(n)?).map_err(|_| CodecError::InvalidUtf8)?.to_string())
            }
            1 => {
                let modality = c.u8()?;
                let width = c.u32()?;
                let height = c.u32()?;
                let n = c.len()?;
                Item::Frame { modality, width, height, payload: c.take(n)?.to_vec() }
            }
            k => return Err(CodecError::UnknownKind(k)),
        };
        items.push(item);
    }
    c.finish()?;
    Ok(Response { id, status, items })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_command_layout() {
        let b = encode_request(1, &["vget /camera/0/depth"]);
        assert_eq!(b.len(), 37);
        assert_eq!(&b[..4], b"UZP1");
        assert_eq!(&b[4..13], &[1, 0, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(&b[13..17], &[20, 0, 0, 0]);
        let r = decode_request(&b).unwrap();
        assert_eq!(r, Request { id: 1, batch: false, commands: vec!["vget /camera/0/depth".into()] });
    }

    #[test]
    fn rejections() {
        let mut b = encode_request(1, &["vget /env/name"]);
        b[..4].copy_from_slice(b"XXXX");
        assert_eq!(decode_request(&b), Err(CodecError::BadMagic(*b"XXXX")));
        let b = encode_request(1, &["vget /env/name"]);
        assert_eq!(decode_request(&b[..b.len() - 1]), Err(CodecError::Truncated));
        let mut long = b.clone();
        long.push(0);
        assert_eq!(decode_request(&long), Err(CodecError::TrailingBytes(1)));
        let mut over = b.clone();
        over[13..17].copy_from_slice(&(MAX_ITEM_LEN + 1).to_le_bytes());
        assert_eq!(decode_request(&over), Err(CodecError::Oversize(MAX_ITEM_LEN + 1)));
        assert_eq!(read_request_bytes(&mut &over[..]), Err(CodecError::Oversize(MAX_ITEM_LEN + 1)));
        let empty = encode_request_flags(3, true, &[] as &[&str]);
        assert_eq!(decode_request(&empty), Err(CodecError::Empty));
    }

    #[test]
    fn stream_reader_matches_frame() {
        let a = encode_request(7, &["vget /env/name", "vget /env/tick"]);
        let b = encode_request(8, &["vget /env/agents"]);
        let joined = [a.clone(), b.clone()].concat();
        let mut src = &joined[..];
        assert_eq!(read_request_bytes(&mut src).unwrap(), a);
        assert_eq!(read_request_bytes(&mut src).unwrap(), b);
        assert_eq!(read_request_bytes(&mut src), Err(CodecError::Truncated));
    }

    #[test]
    fn response_round_trip() {
        let r = Response {
            id: 9,
            status: Status::Partial,
            items: vec![
                Item::Text("ok".into()),
                Item::Frame { modality: 2, width: 2, height: 1, payload: vec![0; 8] },
                Item::Text("error: nope".into()),
            ],
        };
        let b = encode_response(&r);
        assert_eq!(decode_response(&b).unwrap(), r);
        assert_eq!(read_response_bytes(&mut &b[..]).unwrap(), b);
    }
}
