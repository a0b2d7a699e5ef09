//! Transports between the debugger-side nub and the target.
//!
//! In the single-process configuration the debugger calls the target-side
//! nub directly; in the two-process configuration every request and reply
//! crosses a socket as a frame. Both satisfy [`Transport`], so the debugger
//! side cannot tell them apart.

pub mod wire;

use std::io::{BufReader, BufWriter};
use std::net::{TcpStream, ToSocketAddrs};

use thiserror::Error;

pub use wire::{decode, encode, read_frame, write_frame, FaultKind, FrameWords, Message, WireError};

/// The target side: answers one request with one reply.
pub trait Handler {
    fn handle(&mut self, request: Message) -> Message;
}

#[derive(Debug, Error)]
pub enum CommError {
    #[error("protocol error: {0}")]
    Protocol(#[from] WireError),
    #[error("target disconnected")]
    Disconnected,
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// Debugger side of a session: strictly one outstanding request at a time.
pub trait Transport {
    fn request(&mut self, msg: Message) -> Result<Message, CommError>;
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn request(&mut self, msg: Message) -> Result<Message, CommError> {
        (**self).request(msg)
    }
}

/// Direct calls into a target in the same process.
pub struct InProcess<H> {
    pub target: H,
}

impl<H: Handler> InProcess<H> {
    pub fn new(target: H) -> Self {
        InProcess { target }
    }
}

impl<H: Handler> Transport for InProcess<H> {
    fn request(&mut self, msg: Message) -> Result<Message, CommError> {
        Ok(self.target.handle(msg))
    }
}

/// Frames over a TCP connection to `ntarget`.
pub struct TcpTransport {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
}

impl TcpTransport {
    pub fn connect(addr: impl ToSocketAddrs) -> Result<Self, CommError> {
        Self::from_stream(TcpStream::connect(addr)?)
    }

    pub fn from_stream(stream: TcpStream) -> Result<Self, CommError> {
        stream.set_nodelay(true)?;
        Ok(TcpTransport { reader: BufReader::new(stream.try_clone()?), writer: BufWriter::new(stream) })
    }
}

impl Transport for TcpTransport {
    fn request(&mut self, msg: Message) -> Result<Message, CommError> {
        write_frame(&mut self.writer, &msg).map_err(|_| CommError::Disconnected)?;
        match read_frame(&mut self.reader) {
            Ok(Some(reply)) => Ok(reply),
            Ok(None) => Err(CommError::Disconnected),
            Err(WireError::Io(_)) => Err(CommError::Disconnected),
            Err(e) => Err(e.into()),
        }
    }
}

/// Serve requests from one debugger until it disconnects. A malformed frame
/// ends the session with an error.
pub fn serve<H: Handler>(stream: TcpStream, target: &mut H) -> Result<(), CommError> {
    stream.set_nodelay(true)?;
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut writer = BufWriter::new(stream);
    while let Some(req) = read_frame(&mut reader)? {
        let reply = if req.is_request() {
            target.handle(req)
        } else {
            Message::Error { message: format!("unexpected message kind {}", req.kind()) }
        };
        write_frame(&mut writer, &reply)?;
    }
    Ok(())
}
