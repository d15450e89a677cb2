//! TCP and Unix-domain byte streams behind one type.

use std::io::{self, Read, Write};
use std::net::{Shutdown, TcpListener, TcpStream, ToSocketAddrs};
use std::os::unix::net::{UnixListener, UnixStream};
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Endpoint {
    /// `host:port`
    Tcp(String),
    /// Filesystem path of a local socket.
    Local(PathBuf),
}

impl FromStr for Endpoint {
    type Err = String;
    /// Accepts `tcp://host:port`, `ipc://path`, `unix://path`, or a bare `host:port`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Some(rest) = s.strip_prefix("tcp://") {
            return Ok(Endpoint::Tcp(rest.to_string()));
        }
        for p in ["ipc://", "unix://"] {
            if let Some(rest) = s.strip_prefix(p) {
                return Ok(Endpoint::Local(PathBuf::from(rest)));
            }
        }
        if s.contains(':') && !s.contains('/') {
            return Ok(Endpoint::Tcp(s.to_string()));
        }
        Err(format!("unrecognized endpoint '{s}'"))
    }
}

impl std::fmt::Display for Endpoint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Endpoint::Tcp(a) => write!(f, "tcp://{a}"),
            Endpoint::Local(p) => write!(f, "ipc://{}", p.display()),
        }
    }
}

pub enum Stream {
    Tcp(TcpStream),
    Local(UnixStream),
}

impl Stream {
    pub fn connect(ep: &Endpoint, timeout: Duration) -> io::Result<Self> {
        let s = match ep {
            Endpoint::Tcp(addr) => {
                let sa = addr
                    .to_socket_addrs()?
                    .next()
                    .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "address resolves to nothing"))?;
                let t = TcpStream::connect_timeout(&sa, timeout)?;
                t.set_nodelay(true)?;
                Stream::Tcp(t)
            }
            Endpoint::Local(p) => Stream::Local(UnixStream::connect(p)?),
        };
        s.set_timeout(Some(timeout))?;
        Ok(s)
    }

    pub fn set_timeout(&self, t: Option<Duration>) -> io::Result<()> {
        match self {
            Stream::Tcp(s) => {
                s.set_read_timeout(t)?;
                s.set_write_timeout(t)
            }
            Stream::Local(s) => {
                s.set_read_timeout(t)?;
                s.set_write_timeout(t)
            }
        }
    }

    pub fn try_clone(&self) -> io::Result<Self> {
        Ok(match self {
            Stream::Tcp(s) => Stream::Tcp(s.try_clone()?),
            Stream::Local(s) => Stream::Local(s.try_clone()?),
        })
    }

    pub fn shutdown(&self) {
        let _ = match self {
            Stream::Tcp(s) => s.shutdown(Shutdown::Both),
            Stream::Local(s) => s.shutdown(Shutdown::Both),
        };
    }
}

impl Read for Stream {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        match self {
            Stream::Tcp(s) => s.read(buf),
            Stream::Local(s) => s.read(buf),
        }
    }
}

impl Write for Stream {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        match self {
            Stream::Tcp(s) => s.write(buf),
            Stream::Local(s) => s.write(buf),
        }
    }

    fn flush(&mut self) -> io::Result<()> {
        match self {
            Stream::Tcp(s) => s.flush(),
            Stream::Local(s) => s.flush(),
        }
    }
}

pub enum Listener {
    Tcp(TcpListener),
    Local(UnixListener, PathBuf),
}

impl Listener {
    pub fn bind(ep: &Endpoint) -> io::Result<Self> {
        match ep {
            Endpoint::Tcp(addr) => Ok(Listener::Tcp(TcpListener::bind(addr)?)),
            Endpoint::Local(p) => {
                if p.exists() {
                    // a stale socket file from a dead server; a live one refuses removal semantics
                    if UnixStream::connect(p).is_ok() {
                        return Err(io::Error::new(io::ErrorKind::AddrInUse, "local endpoint in use"));
                    }
                    std::fs::remove_file(p)?;
                }
                Ok(Listener::Local(UnixListener::bind(p)?, p.clone()))
            }
        }
    }

    /// The bound endpoint, with the real port for `:0` TCP binds.
    pub fn endpoint(&self) -> io::Result<Endpoint> {
        Ok(match self {
            Listener::Tcp(l) => Endpoint::Tcp(l.local_addr()?.to_string()),
            Listener::Local(_, p) => Endpoint::Local(p.clone()),
        })
    }

    pub fn accept(&self) -> io::Result<Stream> {
        match self {
            Listener::Tcp(l) => {
                let (s, _) = l.accept()?;
                s.set_nodelay(true)?;
                Ok(Stream::Tcp(s))
            }
            Listener::Local(l, _) => Ok(Stream::Local(l.accept()?.0)),
        }
    }
}

impl Drop for Listener {
    fn drop(&mut self) {
        if let Listener::Local(_, p) = self {
            let _ = std::fs::remove_file(p);
        }
    }
}
