//! Debugger-side nub.
//!
//! Owns the symbol files and turns source coordinates into breakpoint flags,
//! shadow frames into [`NubState`]s, and names into values. Everything it
//! learns about the target arrives through fetch, store and frame reads over
//! a [`Transport`].

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;
use std::rc::Rc;

use thiserror::Error;

use crate::comm::{CommError, FaultKind, FrameWords, Message, Transport};
use crate::link::{ExecutableImage, ManifestEntry};
use crate::symtab::{self, lookup_name, Coordinate, SymModule, Symbol, SymbolKind, TypeKind, Uid};
use crate::vm::target::{SPACE_FLAGS, SPACE_MEMORY, SPACE_META};

pub const NAME_LEN: usize = 32;

fn fixed_name(s: &str) -> [u8; NAME_LEN] {
    let mut out = [0u8; NAME_LEN];
    let n = s.len().min(NAME_LEN);
    out[..n].copy_from_slice(&s.as_bytes()[..n]);
    out
}

fn fixed_str(b: &[u8; NAME_LEN]) -> String {
    let n = b.iter().position(|&c| c == 0).unwrap_or(NAME_LEN);
    String::from_utf8_lossy(&b[..n]).into_owned()
}

/// A source coordinate at the nub interface: the file name is held in 32
/// bytes, NUL-padded or truncated.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct NubCoord {
    pub file: [u8; NAME_LEN],
    pub x: u16,
    pub y: u16,
}

impl NubCoord {
    pub fn new(file: &str, y: u16, x: u16) -> Self {
        NubCoord { file: fixed_name(file), x, y }
    }

    pub fn file_name(&self) -> String {
        fixed_str(&self.file)
    }

    /// Wildcard match: an empty file, zero line or zero column in `self`
    /// matches anything there.
    pub fn matches(&self, other: &NubCoord) -> bool {
        (self.file[0] == 0 || self.file == other.file) && (self.y == 0 || self.y == other.y) && (self.x == 0 || self.x == other.x)
    }
}

impl From<&Coordinate> for NubCoord {
    fn from(c: &Coordinate) -> Self {
        NubCoord::new(&c.file, c.y.min(u16::MAX as u32) as u16, c.x.min(u16::MAX as u32) as u16)
    }
}

impl fmt::Display for NubCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}.{}", self.file_name(), self.y, self.x)
    }
}

impl fmt::Debug for NubCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NubCoord({self})")
    }
}

/// Opaque symbol handle: a unit and the tail of a visibility chain in it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Context {
    pub uname: u32,
    pub tail: Uid,
}

#[derive(Clone, PartialEq, Eq)]
pub struct NubState {
    pub name: [u8; NAME_LEN],
    pub src: NubCoord,
    /// Address of the shadow frame in space 0.
    pub fp: u32,
    pub context: Context,
}

impl NubState {
    pub fn empty() -> Self {
        NubState { name: [0; NAME_LEN], src: NubCoord::new("", 0, 0), fp: 0, context: Context::default() }
    }

    pub fn name(&self) -> String {
        fixed_str(&self.name)
    }
}

impl fmt::Debug for NubState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NubState")
            .field("name", &self.name())
            .field("src", &self.src)
            .field("fp", &format_args!("{:#x}", self.fp))
            .field("context", &self.context)
            .finish()
    }
}

/// Operations a callback may use while the target is stopped.
pub trait NubOps {
    fn fetch(&mut self, space: u32, addr: u32, nbytes: u32) -> Result<Vec<u8>, NubError>;
    fn store(&mut self, space: u32, addr: u32, bytes: &[u8]) -> Result<u32, NubError>;
    fn frame(&mut self, n: u32, state: &mut NubState) -> Result<u32, NubError>;
    fn set(&mut self, src: &NubCoord, onbreak: Callback) -> Result<Option<Callback>, NubError>;
    fn remove(&mut self, src: &NubCoord) -> Result<Option<Callback>, NubError>;
}

pub type Callback = Rc<dyn Fn(&NubState, &mut dyn NubOps)>;

#[derive(Debug, Error)]
pub enum NubError {
    #[error(transparent)]
    Transport(#[from] CommError),
    #[error("target: {0}")]
    Target(String),
    #[error("unexpected reply kind {0} from target")]
    Protocol(u8),
    #[error("symbol file for {file}: {message}")]
    Symbols { file: String, message: String },
    #[error("no unit with uname {0:#010x}")]
    UnknownUnit(u32),
    #[error("no stopping point at {0}")]
    NoSuchPoint(NubCoord),
    #[error("{0} names {1} stopping points")]
    Ambiguous(NubCoord, usize),
    #[error("the target is not stopped")]
    NotStopped,
    #[error("the nub is already initialized")]
    AlreadyInitialized,
    #[error("the nub is not initialized")]
    NotInitialized,
    #[error("no frame {requested}; the stack has {depth} frames")]
    Depth { requested: u32, depth: u32 },
    #[error("corrupt shadow frame at {0:#x}")]
    BadFrame(u32),
    #[error("'{0}' is not a variable")]
    NotAValue(String),
    #[error("short read of {0}")]
    ShortRead(String),
}

/// Where symbol files come from.
pub trait SymbolSource {
    fn load(&self, entry: &ManifestEntry) -> Result<Vec<u8>, String>;
}

/// Symbol files in a directory, named as in the manifest.
pub struct DirSource(pub PathBuf);

impl SymbolSource for DirSource {
    fn load(&self, entry: &ManifestEntry) -> Result<Vec<u8>, String> {
        let path = self.0.join(&entry.symfile);
        std::fs::read(&path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

/// Symbol files held in memory, by uname.
pub struct MemorySource(pub BTreeMap<u32, Vec<u8>>);

impl SymbolSource for MemorySource {
    fn load(&self, entry: &ManifestEntry) -> Result<Vec<u8>, String> {
        self.0.get(&entry.uname).cloned().ok_or_else(|| "not available".into())
    }
}

#[derive(Debug, Clone)]
pub enum Event {
    Break(NubState),
    /// `state` is the top frame when the fault happened inside
    /// instrumented code.
    Fault { kind: FaultKind, addr: u32, state: Option<NubState> },
    Exit { code: i32, balanced: Option<bool> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Run {
    Fresh,
    Stopped,
    Faulted,
    Exited,
}

/// A variable's declared type and current bytes.
#[derive(Debug, Clone)]
pub struct Value {
    pub module: Rc<SymModule>,
    pub symbol: Symbol,
    pub ty: Uid,
    pub bytes: Vec<u8>,
    /// Where the bytes live in space 0; `None` for constants.
    pub addr: Option<u32>,
}

pub struct Nub<T> {
    transport: T,
    manifest: Vec<ManifestEntry>,
    meta_base: u32,
    entry: (String, u32),
    source: Box<dyn SymbolSource>,
    cache: RefCell<HashMap<u32, Rc<SymModule>>>,
    breakpoints: HashMap<(u32, u32), Callback>,
    arms: HashMap<u32, u32>,
    fault: Option<Callback>,
    run: Run,
    dismissed: u64,
}

impl<T: Transport> Nub<T> {
    pub fn new(transport: T, image: &ExecutableImage, source: Box<dyn SymbolSource>) -> Self {
        let f = &image.functions[image.entry as usize];
        Nub {
            transport,
            manifest: image.manifest.clone(),
            meta_base: image.meta_base,
            entry: (f.name.clone(), f.uname),
            source,
            cache: RefCell::new(HashMap::new()),
            breakpoints: HashMap::new(),
            arms: HashMap::new(),
            fault: None,
            run: Run::Fresh,
            dismissed: 0,
        }
    }

    pub fn manifest(&self) -> &[ManifestEntry] {
        &self.manifest
    }

    /// Breakpoint traps dismissed because no handler was set for them.
    pub fn dismissed(&self) -> u64 {
        self.dismissed
    }

    pub fn transport_mut(&mut self) -> &mut T {
        &mut self.transport
    }

    /// The symbol table of unit `uname`, loaded on first use.
    pub fn module(&self, uname: u32) -> Result<Rc<SymModule>, NubError> {
        if let Some(m) = self.cache.borrow().get(&uname) {
            return Ok(Rc::clone(m));
        }
        let entry = self.manifest.iter().find(|e| e.uname == uname).ok_or(NubError::UnknownUnit(uname))?;
        let sym_err = |message: String| NubError::Symbols { file: entry.file.clone(), message };
        let bytes = self.source.load(entry).map_err(sym_err)?;
        let m = Rc::new(symtab::from_bytes(&bytes).map_err(|e| sym_err(e.to_string()))?);
        self.cache.borrow_mut().insert(uname, Rc::clone(&m));
        Ok(m)
    }

    pub fn modules(&self) -> Result<Vec<Rc<SymModule>>, NubError> {
        self.manifest.iter().map(|e| self.module(e.uname)).collect()
    }

    fn request(&mut self, msg: Message) -> Result<Message, NubError> {
        match self.transport.request(msg)? {
            Message::Error { message } => Err(NubError::Target(message)),
            reply => Ok(reply),
        }
    }

    fn read_frame(&mut self, fp: u32) -> Result<FrameWords, NubError> {
        match self.request(Message::FrameRead { fp })? {
            Message::FrameReply(w) => Ok(w),
            other => Err(NubError::Protocol(other.kind())),
        }
    }

    /// Start the session: the target stops before its entry function runs
    /// and `startup` is called. `fault` is called on any later fault.
    pub fn init(&mut self, startup: Callback, fault: Callback) -> Result<NubState, NubError> {
        if self.run != Run::Fresh {
            return Err(NubError::AlreadyInitialized);
        }
        match self.request(Message::Continue)? {
            Message::StartupEvent => {}
            other => return Err(NubError::Protocol(other.kind())),
        }
        self.run = Run::Stopped;
        self.fault = Some(fault);
        let (name, uname) = self.entry.clone();
        let m = self.module(uname)?;
        let sym = m.symbols().find(|s| s.id == name && s.kind.address_index().is_some());
        let fp = self.read_frame(0)?.fp;
        let state = NubState {
            name: fixed_name(&name),
            src: sym.map(|s| NubCoord::from(&s.src)).unwrap_or(NubCoord::new(&m.file, 0, 0)),
            fp,
            context: Context { uname, tail: m.globals },
        };
        startup(&state, self);
        Ok(state)
    }

    /// Resume until a breakpoint that has a handler, a fault or exit.
    /// Traps at points without a handler are dismissed here.
    pub fn resume(&mut self) -> Result<Event, NubError> {
        match self.run {
            Run::Fresh => return Err(NubError::NotInitialized),
            Run::Exited => return Err(NubError::NotStopped),
            Run::Stopped | Run::Faulted => {}
        }
        loop {
            match self.request(Message::Continue)? {
                Message::BreakEvent { index, uname } => {
                    let Some(cb) = self.breakpoints.get(&(uname, index)).cloned() else {
                        self.dismissed += 1;
                        continue;
                    };
                    let mut state = NubState::empty();
                    self.frame(0, &mut state)?;
                    cb(&state, self);
                    return Ok(Event::Break(state));
                }
                Message::FaultEvent { kind, addr, uname, .. } => {
                    self.run = Run::Faulted;
                    let state = if uname != 0 {
                        let mut s = NubState::empty();
                        self.frame(0, &mut s).ok().map(|_| s)
                    } else {
                        None
                    };
                    if let Some(cb) = self.fault.clone() {
                        cb(state.as_ref().unwrap_or(&NubState::empty()), self);
                    }
                    return Ok(Event::Fault { kind, addr, state });
                }
                Message::ExitEvent { code, balanced } => {
                    self.run = Run::Exited;
                    return Ok(Event::Exit { code, balanced });
                }
                other => return Err(NubError::Protocol(other.kind())),
            }
        }
    }

    pub fn is_stopped(&self) -> bool {
        matches!(self.run, Run::Stopped | Run::Faulted)
    }

    /// Call `apply(index, coordinate)` for every stopping point matching
    /// `pattern`, unit by unit in link order.
    pub fn src(&self, pattern: &NubCoord, mut apply: impl FnMut(u32, &NubCoord)) -> Result<(), NubError> {
        for m in self.modules()? {
            for (i, sp) in m.spoints.iter().enumerate() {
                let c = NubCoord::from(&sp.src);
                if pattern.matches(&c) {
                    apply(i as u32, &c);
                }
            }
        }
        Ok(())
    }

    /// The unit and index of the one stopping point exactly at `src`.
    fn locate(&self, src: &NubCoord) -> Result<(u32, u32), NubError> {
        let mut found = Vec::new();
        for m in self.modules()? {
            for (i, sp) in m.spoints.iter().enumerate() {
                if NubCoord::from(&sp.src) == *src {
                    found.push((m.uname, i as u32));
                }
            }
        }
        match found.len() {
            0 => Err(NubError::NoSuchPoint(*src)),
            1 => Ok(found[0]),
            n => Err(NubError::Ambiguous(*src, n)),
        }
    }

    fn write_flag(&mut self, index: u32, value: u8) -> Result<(), NubError> {
        match self.request(Message::Store { space: SPACE_FLAGS, addr: index, bytes: vec![value] })? {
            Message::StoreReply { count: 1 } => Ok(()),
            Message::StoreReply { .. } => Err(NubError::Target(format!("breakpoint flag {index} out of range"))),
            other => Err(NubError::Protocol(other.kind())),
        }
    }

    /// Look `name` up from `state` and fetch its value.
    pub fn resolve_value(&mut self, state: &NubState, name: &str) -> Result<Option<Value>, NubError> {
        let module = self.module(state.context.uname)?;
        let all = self.modules()?;
        let refs: Vec<&SymModule> = all.iter().map(|m| m.as_ref()).collect();
        let Some(sym) = lookup_name(name, &module, state.context.tail, &refs).cloned() else {
            return Ok(None);
        };
        let owner = self.module(sym.module)?;
        let size = owner.type_node(sym.ty).map_or(0, |t| t.size);
        let is_function = matches!(owner.unqualified(sym.ty).map(|(_, t)| &t.kind), Some(TypeKind::Function { .. }));
        let (bytes, addr) = match sym.kind {
            SymbolKind::Local { offset } | SymbolKind::Param { offset } => {
                let addr = state.fp.wrapping_add(offset as u32);
                (self.fetch_exact(SPACE_MEMORY, addr, size, name)?, Some(addr))
            }
            SymbolKind::Static { index } | SymbolKind::Global { index } => {
                let entry = self.manifest.iter().find(|e| e.uname == sym.module).ok_or(NubError::UnknownUnit(sym.module))?;
                let record = self.fetch_exact(SPACE_META, entry.record - self.meta_base, 8, "module record")?;
                let vector = u32::from_le_bytes(record[4..8].try_into().unwrap());
                let slot = self.fetch_exact(SPACE_MEMORY, vector + 4 * index, 4, "address vector")?;
                let addr = u32::from_le_bytes(slot.try_into().unwrap());
                if is_function {
                    (addr.to_le_bytes().to_vec(), Some(addr))
                } else {
                    (self.fetch_exact(SPACE_MEMORY, addr, size, name)?, Some(addr))
                }
            }
            SymbolKind::EnumConst { value } => ((value as i32).to_le_bytes()[..size.min(4) as usize].to_vec(), None),
            SymbolKind::Typedef => return Err(NubError::NotAValue(name.into())),
        };
        Ok(Some(Value { ty: sym.ty, symbol: sym, module: owner, bytes, addr }))
    }

    fn fetch_exact(&mut self, space: u32, addr: u32, n: u32, what: &str) -> Result<Vec<u8>, NubError> {
        let b = self.fetch(space, addr, n)?;
        if b.len() != n as usize {
            return Err(NubError::ShortRead(what.into()));
        }
        Ok(b)
    }

    fn require_stopped(&self) -> Result<(), NubError> {
        if self.is_stopped() {
            Ok(())
        } else {
            Err(NubError::NotStopped)
        }
    }
}

impl<T: Transport> NubOps for Nub<T> {
    fn fetch(&mut self, space: u32, addr: u32, nbytes: u32) -> Result<Vec<u8>, NubError> {
        if nbytes == 0 {
            return Ok(Vec::new());
        }
        match self.request(Message::Fetch { space, addr, len: nbytes })? {
            Message::FetchReply { bytes } => Ok(bytes),
            other => Err(NubError::Protocol(other.kind())),
        }
    }

    fn store(&mut self, space: u32, addr: u32, bytes: &[u8]) -> Result<u32, NubError> {
        match self.request(Message::Store { space, addr, bytes: bytes.to_vec() })? {
            Message::StoreReply { count } => Ok(count),
            other => Err(NubError::Protocol(other.kind())),
        }
    }

    /// Fill `state` from frame `n`, 0 being the top. Walking down records
    /// each frame's `up` link.
    fn frame(&mut self, n: u32, state: &mut NubState) -> Result<u32, NubError> {
        self.require_stopped()?;
        let mut w = self.read_frame(0)?;
        if w.module == 0 {
            return Err(NubError::Depth { requested: n, depth: 0 });
        }
        for k in 1..=n {
            if w.down == 0 {
                return Err(NubError::BadFrame(w.fp));
            }
            let below = self.read_frame(w.down)?;
            if below.module == 0 {
                return Err(NubError::Depth { requested: n, depth: k });
            }
            self.store(SPACE_MEMORY, below.fp, &w.fp.to_le_bytes())?;
            w = below;
        }
        let m = self.module(w.module)?;
        let func = m.symbol(Uid(w.func)).ok_or(NubError::BadFrame(w.fp))?;
        let sp = m.spoints.get(w.ip as usize).ok_or(NubError::BadFrame(w.fp))?;
        *state = NubState {
            name: fixed_name(&func.id),
            src: NubCoord::from(&sp.src),
            fp: w.fp,
            context: Context { uname: w.module, tail: sp.tail },
        };
        Ok(n)
    }

    fn set(&mut self, src: &NubCoord, onbreak: Callback) -> Result<Option<Callback>, NubError> {
        self.require_stopped()?;
        let (uname, index) = self.locate(src)?;
        let prev = self.breakpoints.insert((uname, index), onbreak);
        if prev.is_none() {
            let arms = self.arms.entry(index).or_insert(0);
            *arms += 1;
            if *arms == 1 {
                self.write_flag(index, 1)?;
            }
        }
        Ok(prev)
    }

    fn remove(&mut self, src: &NubCoord) -> Result<Option<Callback>, NubError> {
        self.require_stopped()?;
        let (uname, index) = self.locate(src)?;
        let Some(prev) = self.breakpoints.remove(&(uname, index)) else {
            return Ok(None);
        };
        let arms = self.arms.get_mut(&index).expect("armed with a handler");
        *arms -= 1;
        if *arms == 0 {
            self.arms.remove(&index);
            self.write_flag(index, 0)?;
        }
        Ok(Some(prev))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coord_truncation() {
        let c = NubCoord::new("a.c", 3, 4);
        assert_eq!(c.file_name(), "a.c");
        assert_eq!(c.file[3], 0);
        let long = "x".repeat(40);
        let c = NubCoord::new(&long, 1, 1);
        assert_eq!(c.file_name(), "x".repeat(32));
        assert!(NubCoord::new("", 0, 0).matches(&c));
        assert!(NubCoord::new("", 1, 0).matches(&c));
        assert!(!NubCoord::new("", 2, 0).matches(&c));
        assert_eq!(c.to_string(), format!("{}:1.1", "x".repeat(32)));
    }
}
