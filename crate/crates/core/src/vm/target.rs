//! Target-side nub: serves debugger requests against a [`Machine`].

use crate::codegen::frame;
use crate::comm::{FrameWords, Handler, Message};
use crate::link::{DATA_BASE, STACK_TOP};

use super::{Machine, Status, Stop};

pub const SPACE_MEMORY: u32 = 0;
pub const SPACE_FLAGS: u32 = 1;
pub const SPACE_META: u32 = 2;

pub struct TargetNub {
    machine: Machine,
    started: bool,
}

impl TargetNub {
    pub fn new(machine: Machine) -> Self {
        TargetNub { machine, started: false }
    }

    pub fn machine(&self) -> &Machine {
        &self.machine
    }

    /// The bytes backing `space` and the address of their first byte.
    fn space(&mut self, space: u32) -> Result<(&mut [u8], u32), String> {
        let img = self.machine.image();
        let (meta_base, meta_len) = (img.meta_base, img.meta_len);
        match space {
            SPACE_MEMORY => Ok((self.machine.memory_mut(), DATA_BASE)),
            SPACE_FLAGS => Ok((self.machine.flags_mut(), 0)),
            SPACE_META => {
                let at = (meta_base - DATA_BASE) as usize;
                Ok((&mut self.machine.memory_mut()[at..at + meta_len as usize], 0))
            }
            _ => Err(format!("unknown address space {space}")),
        }
    }

    fn fetch(&mut self, space: u32, addr: u32, len: u32) -> Message {
        match self.space(space) {
            Ok((bytes, base)) => {
                let Some(off) = addr.checked_sub(base).map(|o| o as usize) else {
                    return Message::FetchReply { bytes: Vec::new() };
                };
                let end = off.saturating_add(len as usize).min(bytes.len());
                Message::FetchReply { bytes: bytes.get(off..end).unwrap_or_default().to_vec() }
            }
            Err(message) => Message::Error { message },
        }
    }

    fn store(&mut self, space: u32, addr: u32, data: &[u8]) -> Message {
        if space == SPACE_META {
            return Message::Error { message: "address space 2 is read-only".into() };
        }
        match self.space(space) {
            Ok((bytes, base)) => {
                let Some(off) = addr.checked_sub(base).map(|o| o as usize) else {
                    return Message::StoreReply { count: 0 };
                };
                let end = off.saturating_add(data.len()).min(bytes.len());
                let n = end.saturating_sub(off);
                if n > 0 {
                    bytes[off..end].copy_from_slice(&data[..n]);
                }
                Message::StoreReply { count: n as u32 }
            }
            Err(message) => Message::Error { message },
        }
    }

    fn frame(&self, fp: u32) -> Message {
        let m = &self.machine;
        let fp = if fp == 0 { m.word(m.image().nub_tos).unwrap_or(0) } else { fp };
        let word = |off| m.word(fp + off).filter(|_| fp + frame::SIZE <= STACK_TOP);
        match (word(frame::UP), word(frame::DOWN), word(frame::FUNC), word(frame::MODULE), word(frame::IP)) {
            (Some(up), Some(down), Some(func), Some(module), Some(ip)) => {
                Message::FrameReply(FrameWords { fp, up, down, func, module, ip })
            }
            _ => Message::Error { message: format!("no frame at {fp:#x}") },
        }
    }

    fn resume(&mut self) -> Message {
        if !self.started {
            self.started = true;
            return Message::StartupEvent;
        }
        match self.machine.status() {
            Status::Exited => return Message::Error { message: "target has exited".into() },
            Status::Faulted => {
                // a faulted target cannot continue; it is terminated
                self.machine.status = Status::Exited;
                return Message::ExitEvent { code: -1, balanced: None };
            }
            _ => {}
        }
        match self.machine.run() {
            Stop::Break { index, uname } => Message::BreakEvent { index, uname },
            Stop::Fault { kind, addr } => {
                let m = &self.machine;
                let tos = m.word(m.image().nub_tos).unwrap_or(0);
                let (uname, ip) = if tos != m.sentinel() {
                    (m.word(tos + frame::MODULE).unwrap_or(0), m.word(tos + frame::IP).unwrap_or(0))
                } else {
                    (0, 0)
                };
                Message::FaultEvent { kind, addr, uname, ip }
            }
            Stop::Exit { code, balanced } => Message::ExitEvent { code, balanced },
        }
    }
}

impl Handler for TargetNub {
    fn handle(&mut self, request: Message) -> Message {
        if self.machine.status() == Status::Exited && request != Message::Continue {
            return Message::Error { message: "target has exited".into() };
        }
        match request {
            Message::Fetch { space, addr, len } => self.fetch(space, addr, len),
            Message::Store { space, addr, bytes } => self.store(space, addr, &bytes),
            Message::FlagsWrite { index, value } => match self.machine.flags_mut().get_mut(index as usize) {
                Some(f) => {
                    *f = value;
                    Message::StoreReply { count: 1 }
                }
                None => Message::Error { message: format!("no breakpoint flag {index}") },
            },
            Message::Continue => self.resume(),
            Message::FrameRead { fp } => self.frame(fp),
            other => Message::Error { message: format!("unexpected message kind {}", other.kind()) },
        }
    }
}
