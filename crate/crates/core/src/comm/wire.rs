//! Framed messages between the debugger-side and target-side nubs.
//!
//! A frame is a 4-byte little-endian length (covering kind and payload), a
//! kind byte, then the payload. Integers are little-endian fixed width; byte
//! strings and text carry a `u32` length prefix.

use std::io::{self, Read, Write};

use thiserror::Error;

/// Largest frame accepted from a peer.
pub const MAX_FRAME: u32 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FaultKind {
    DivideByZero,
    Memory,
    BadCall,
}

impl FaultKind {
    pub fn code(self) -> u8 {
        match self {
            FaultKind::DivideByZero => 1,
            FaultKind::Memory => 2,
            FaultKind::BadCall => 3,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        Some(match c {
            1 => FaultKind::DivideByZero,
            2 => FaultKind::Memory,
            3 => FaultKind::BadCall,
            _ => return None,
        })
    }

    pub fn describe(self) -> &'static str {
        match self {
            FaultKind::DivideByZero => "divide by zero",
            FaultKind::Memory => "memory access out of range",
            FaultKind::BadCall => "bad call target",
        }
    }
}

/// The raw contents of a shadow frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameWords {
    pub fp: u32,
    pub up: u32,
    pub down: u32,
    pub func: u32,
    pub module: u32,
    pub ip: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Message {
    Fetch { space: u32, addr: u32, len: u32 },
    Store { space: u32, addr: u32, bytes: Vec<u8> },
    FlagsWrite { index: u32, value: u8 },
    BreakEvent { index: u32, uname: u32 },
    /// `uname` and `ip` come from the top shadow frame when there is one.
    FaultEvent { kind: FaultKind, addr: u32, uname: u32, ip: u32 },
    StartupEvent,
    Continue,
    /// Read the shadow frame at `fp`; 0 reads the frame `_Nub_tos` names.
    FrameRead { fp: u32 },
    /// `balanced` is `None` when the program left without returning from
    /// its entry function.
    ExitEvent { code: i32, balanced: Option<bool> },
    Error { message: String },
    FetchReply { bytes: Vec<u8> },
    StoreReply { count: u32 },
    FrameReply(FrameWords),
}

impl Message {
    pub fn kind(&self) -> u8 {
        match self {
            Message::Fetch { .. } => 1,
            Message::Store { .. } => 2,
            Message::FlagsWrite { .. } => 3,
            Message::BreakEvent { .. } => 4,
            Message::FaultEvent { .. } => 5,
            Message::StartupEvent => 6,
            Message::Continue => 7,
            Message::FrameRead { .. } => 8,
            Message::ExitEvent { .. } => 9,
            Message::Error { .. } => 10,
            Message::FetchReply { .. } => 11,
            Message::StoreReply { .. } => 12,
            Message::FrameReply(_) => 13,
        }
    }

    pub fn is_request(&self) -> bool {
        matches!(
            self,
            Message::Fetch { .. } | Message::Store { .. } | Message::FlagsWrite { .. } | Message::Continue | Message::FrameRead { .. }
        )
    }
}

#[derive(Debug, Error)]
pub enum WireError {
    #[error("frame truncated")]
    Truncated,
    #[error("unknown message kind {0}")]
    UnknownKind(u8),
    #[error("frame length {0} out of range")]
    BadLength(u32),
    #[error("malformed {0} payload")]
    Malformed(&'static str),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn put_u32(out: &mut Vec<u8>, v: u32) {
    out.extend_from_slice(&v.to_le_bytes());
}

fn put_bytes(out: &mut Vec<u8>, b: &[u8]) {
    put_u32(out, b.len() as u32);
    out.extend_from_slice(b);
}

/// Encode one frame.
pub fn encode(msg: &Message) -> Vec<u8> {
    let mut p = Vec::new();
    match msg {
        Message::Fetch { space, addr, len } => {
            put_u32(&mut p, *space);
            put_u32(&mut p, *addr);
            put_u32(&mut p, *len);
        }
        Message::Store { space, addr, bytes } => {
            put_u32(&mut p, *space);
            put_u32(&mut p, *addr);
            put_bytes(&mut p, bytes);
        }
        Message::FlagsWrite { index, value } => {
            put_u32(&mut p, *index);
            p.push(*value);
        }
        Message::BreakEvent { index, uname } => {
            put_u32(&mut p, *index);
            put_u32(&mut p, *uname);
        }
        Message::FaultEvent { kind, addr, uname, ip } => {
            p.push(kind.code());
            put_u32(&mut p, *addr);
            put_u32(&mut p, *uname);
            put_u32(&mut p, *ip);
        }
        Message::StartupEvent | Message::Continue => {}
        Message::FrameRead { fp } => put_u32(&mut p, *fp),
        Message::ExitEvent { code, balanced } => {
            p.extend_from_slice(&code.to_le_bytes());
            p.push(match balanced {
                Some(false) => 0,
                Some(true) => 1,
                None => 2,
            });
        }
        Message::Error { message } => put_bytes(&mut p, message.as_bytes()),
        Message::FetchReply { bytes } => put_bytes(&mut p, bytes),
        Message::StoreReply { count } => put_u32(&mut p, *count),
        Message::FrameReply(w) => {
            for v in [w.fp, w.up, w.down, w.func, w.module, w.ip] {
                put_u32(&mut p, v);
            }
        }
    }
    let mut out = Vec::with_capacity(p.len() + 5);
    put_u32(&mut out, p.len() as u32 + 1);
    out.push(msg.kind());
    out.extend_from_slice(&p);
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    what: &'static str,
}

impl Cursor<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], WireError> {
        if self.buf.len() < n {
            return Err(WireError::Malformed(self.what));
        }
        let (a, b) = self.buf.split_at(n);
        self.buf = b;
        Ok(a)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn bytes(&mut self) -> Result<Vec<u8>, WireError> {
        let n = self.u32()? as usize;
        Ok(self.take(n)?.to_vec())
    }

    fn end(self) -> Result<(), WireError> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(WireError::Malformed(self.what))
        }
    }
}

fn kind_name(kind: u8) -> &'static str {
    const NAMES: [&str; 13] = [
        "FETCH",
        "STORE",
        "FLAGS_WRITE",
        "BREAK_EVENT",
        "FAULT_EVENT",
        "STARTUP_EVENT",
        "CONTINUE",
        "FRAME_READ",
        "EXIT_EVENT",
        "ERROR",
        "FETCH_REPLY",
        "STORE_REPLY",
        "FRAME_REPLY",
    ];
    NAMES.get(kind as usize - 1).copied().unwrap_or("unknown")
}

fn decode_body(kind: u8, payload: &[u8]) -> Result<Message, WireError> {
    if !(1..=13).contains(&kind) {
        return Err(WireError::UnknownKind(kind));
    }
    let mut c = Cursor { buf: payload, what: kind_name(kind) };
    let msg = match kind {
        1 => Message::Fetch { space: c.u32()?, addr: c.u32()?, len: c.u32()? },
        2 => Message::Store { space: c.u32()?, addr: c.u32()?, bytes: c.bytes()? },
        3 => Message::FlagsWrite { index: c.u32()?, value: c.u8()? },
        4 => Message::BreakEvent { index: c.u32()?, uname: c.u32()? },
        5 => {
            let kind = FaultKind::from_code(c.u8()?).ok_or(WireError::Malformed("FAULT_EVENT"))?;
            Message::FaultEvent { kind, addr: c.u32()?, uname: c.u32()?, ip: c.u32()? }
        }
        6 => Message::StartupEvent,
        7 => Message::Continue,
        8 => Message::FrameRead { fp: c.u32()? },
        9 => {
            let code = c.u32()? as i32;
            let balanced = match c.u8()? {
                0 => Some(false),
                1 => Some(true),
                2 => None,
                _ => return Err(WireError::Malformed("EXIT_EVENT")),
            };
            Message::ExitEvent { code, balanced }
        }
        10 => {
            let message = String::from_utf8(c.bytes()?).map_err(|_| WireError::Malformed("ERROR"))?;
            Message::Error { message }
        }
        11 => Message::FetchReply { bytes: c.bytes()? },
        12 => Message::StoreReply { count: c.u32()? },
        _ => Message::FrameReply(FrameWords {
            fp: c.u32()?,
            up: c.u32()?,
            down: c.u32()?,
            func: c.u32()?,
            module: c.u32()?,
            ip: c.u32()?,
        }),
    };
    c.end()?;
    Ok(msg)
}

/// Decode one frame from the front of `buf`, returning the message and the
/// number of bytes consumed.
pub fn decode(buf: &[u8]) -> Result<(Message, usize), WireError> {
    if buf.len() < 4 {
        return Err(WireError::Truncated);
    }
    let len = u32::from_le_bytes(buf[..4].try_into().unwrap());
    if len == 0 || len > MAX_FRAME {
        return Err(WireError::BadLength(len));
    }
    let end = 4 + len as usize;
    if buf.len() < end {
        return Err(WireError::Truncated);
    }
    Ok((decode_body(buf[4], &buf[5..end])?, end))
}

/// Read one frame. `Ok(None)` means the peer closed the stream cleanly
/// between frames.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<Message>, WireError> {
    let mut len = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut len[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(WireError::Truncated),
            n => got += n,
        }
    }
    let len = u32::from_le_bytes(len);
    if len == 0 || len > MAX_FRAME {
        return Err(WireError::BadLength(len));
    }
    let mut body = vec![0u8; len as usize];
    r.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => WireError::Truncated,
        _ => WireError::Io(e),
    })?;
    Ok(Some(decode_body(body[0], &body[1..])?))
}

pub fn write_frame<W: Write>(w: &mut W, msg: &Message) -> io::Result<()> {
    w.write_all(&encode(msg))?;
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fetch_round_trip() {
        let m = Message::Fetch { space: 1, addr: 17, len: 1 };
        let bytes = encode(&m);
        assert_eq!(bytes, [13, 0, 0, 0, 1, 1, 0, 0, 0, 17, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(decode(&bytes).unwrap(), (m, bytes.len()));
    }

    #[test]
    fn truncated_frames_are_rejected() {
        let bytes = encode(&Message::Store { space: 0, addr: 4096, bytes: vec![1, 2, 3] });
        for cut in 0..bytes.len() {
            assert!(decode(&bytes[..cut]).is_err(), "cut at {cut}");
            assert!(read_frame(&mut &bytes[..cut]).map_or(true, |m| m.is_none() && cut == 0));
        }
    }

    #[test]
    fn payload_length_must_match_kind() {
        let mut bytes = encode(&Message::Continue);
        bytes[0] = 2;
        bytes.push(0);
        assert!(matches!(decode(&bytes), Err(WireError::Malformed("CONTINUE"))));
        assert!(matches!(decode(&[1, 0, 0, 0, 99]), Err(WireError::UnknownKind(99))));
    }

    fn message() -> impl Strategy<Value = Message> {
        let bytes = proptest::collection::vec(any::<u8>(), 0..64);
        let fault = prop_oneof![Just(FaultKind::DivideByZero), Just(FaultKind::Memory), Just(FaultKind::BadCall)];
        prop_oneof![
            (any::<u32>(), any::<u32>(), any::<u32>()).prop_map(|(space, addr, len)| Message::Fetch { space, addr, len }),
            (any::<u32>(), any::<u32>(), bytes.clone()).prop_map(|(space, addr, bytes)| Message::Store { space, addr, bytes }),
            (any::<u32>(), any::<u8>()).prop_map(|(index, value)| Message::FlagsWrite { index, value }),
            (any::<u32>(), any::<u32>()).prop_map(|(index, uname)| Message::BreakEvent { index, uname }),
            (fault, any::<u32>(), any::<u32>(), any::<u32>())
                .prop_map(|(kind, addr, uname, ip)| Message::FaultEvent { kind, addr, uname, ip }),
            Just(Message::StartupEvent),
            Just(Message::Continue),
            any::<u32>().prop_map(|fp| Message::FrameRead { fp }),
            (any::<i32>(), proptest::option::of(any::<bool>())).prop_map(|(code, balanced)| Message::ExitEvent { code, balanced }),
            ".{0,40}".prop_map(|message| Message::Error { message }),
            bytes.prop_map(|bytes| Message::FetchReply { bytes }),
            any::<u32>().prop_map(|count| Message::StoreReply { count }),
            any::<[u32; 6]>().prop_map(|w| Message::FrameReply(FrameWords {
                fp: w[0],
                up: w[1],
                down: w[2],
                func: w[3],
                module: w[4],
                ip: w[5]
            })),
        ]
    }

    proptest! {
        #[test]
        fn random_messages_round_trip(msgs in proptest::collection::vec(message(), 1..8)) {
            let mut stream = Vec::new();
            for m in &msgs {
                stream.extend(encode(m));
            }
            let mut r = &stream[..];
            for m in &msgs {
                prop_assert_eq!(read_frame(&mut r).unwrap(), Some(m.clone()));
            }
            prop_assert!(read_frame(&mut r).unwrap().is_none());
        }
    }
}
