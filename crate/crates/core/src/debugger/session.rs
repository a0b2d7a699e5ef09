//! The command interpreter behind `cdb`.
//!
//! Each command yields [`Reply`] values that render either as text lines or
//! as JSON objects; both come from the same data, so the two output modes
//! never disagree.

use std::cell::Cell;
use std::rc::Rc;

use serde_json::{json, Value as Json};

use super::format::format_value;
use crate::comm::{FaultKind, Transport};
use crate::nub::{Callback, Event, Nub, NubCoord, NubError, NubOps, NubState};

#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Loaded { units: usize, function: String, at: NubCoord },
    Stopped { function: String, at: NubCoord },
    Faulted { kind: FaultKind, function: Option<String>, at: Option<NubCoord> },
    Exited { code: i32, balanced: Option<bool> },
    BreakSet { id: u32, at: NubCoord, replaced: bool },
    BreakCleared { id: u32, at: NubCoord },
    NoBreakpoint { at: NubCoord },
    Candidates { file: String, line: u16, points: Vec<NubCoord> },
    Points(Vec<(u32, NubCoord)>),
    Value { name: String, value: String },
    NotVisible { name: String },
    Frame { n: u32, function: String, at: NubCoord },
    Backtrace(Vec<(u32, String, NubCoord)>),
    Error(String),
    Usage(String),
    Quit,
}

fn coord_json(c: &NubCoord) -> Json {
    json!({ "file": c.file_name(), "line": c.y, "column": c.x })
}

impl Reply {
    pub fn to_text(&self) -> String {
        match self {
            Reply::Loaded { units, function, at } => {
                format!("loaded {units} unit{}; stopped before {function} {at}", if *units == 1 { "" } else { "s" })
            }
            Reply::Stopped { function, at } => format!("stopped at {function} {at}"),
            Reply::Faulted { kind, function, at } => match (function, at) {
                (Some(f), Some(at)) => format!("fault: {} in {f} {at}", kind.describe()),
                _ => format!("fault: {}", kind.describe()),
            },
            Reply::Exited { code, balanced } => {
                let mut s = format!("exited with code {code}");
                if *balanced == Some(false) {
                    s.push_str(" (shadow stack unbalanced)");
                }
                s
            }
            Reply::BreakSet { id, at, replaced } => {
                format!("breakpoint {id} at {at}{}", if *replaced { " (replaced)" } else { "" })
            }
            Reply::BreakCleared { id, at } => format!("cleared breakpoint {id} at {at}"),
            Reply::NoBreakpoint { at } => format!("no breakpoint at {at}"),
            Reply::Candidates { file, line, points } => {
                let list: Vec<String> = points.iter().map(|p| p.to_string()).collect();
                format!(
                    "{file}:{line} has {} stopping points: {}; use file:line.column",
                    points.len(),
                    list.join(" ")
                )
            }
            Reply::Points(points) => {
                points.iter().map(|(i, c)| format!("{i:4} {c}")).collect::<Vec<_>>().join("\n")
            }
            Reply::Value { name, value } => format!("{name} = {value}"),
            Reply::NotVisible { name } => format!("{name}: not visible"),
            Reply::Frame { n, function, at } => format!("#{n} {function} {at}"),
            Reply::Backtrace(frames) => {
                frames.iter().map(|(n, f, at)| format!("#{n} {f} {at}")).collect::<Vec<_>>().join("\n")
            }
            Reply::Error(e) => format!("error: {e}"),
            Reply::Usage(u) => format!("usage: {u}"),
            Reply::Quit => String::new(),
        }
    }

    pub fn to_json(&self) -> Json {
        match self {
            Reply::Loaded { units, function, at } => {
                json!({ "kind": "loaded", "units": units, "function": function, "at": coord_json(at) })
            }
            Reply::Stopped { function, at } => json!({ "kind": "stopped", "function": function, "at": coord_json(at) }),
            Reply::Faulted { kind, function, at } => json!({
                "kind": "fault",
                "fault": kind.describe(),
                "function": function,
                "at": at.as_ref().map(coord_json),
            }),
            Reply::Exited { code, balanced } => json!({ "kind": "exited", "code": code, "balanced": balanced }),
            Reply::BreakSet { id, at, replaced } => {
                json!({ "kind": "break", "id": id, "at": coord_json(at), "replaced": replaced })
            }
            Reply::BreakCleared { id, at } => json!({ "kind": "clear", "id": id, "at": coord_json(at) }),
            Reply::NoBreakpoint { at } => json!({ "kind": "error", "message": self.to_text(), "at": coord_json(at) }),
            Reply::Candidates { points, .. } => json!({
                "kind": "ambiguous",
                "message": self.to_text(),
                "points": points.iter().map(coord_json).collect::<Vec<_>>(),
            }),
            Reply::Points(points) => json!({
                "kind": "spoints",
                "points": points.iter().map(|(i, c)| json!({ "index": i, "at": coord_json(c) })).collect::<Vec<_>>(),
            }),
            Reply::Value { name, value } => json!({ "kind": "value", "name": name, "value": value }),
            Reply::NotVisible { name } => json!({ "kind": "not_visible", "name": name }),
            Reply::Frame { n, function, at } => {
                json!({ "kind": "frame", "frame": n, "function": function, "at": coord_json(at) })
            }
            Reply::Backtrace(frames) => json!({
                "kind": "backtrace",
                "frames": frames
                    .iter()
                    .map(|(n, f, at)| json!({ "frame": n, "function": f, "at": coord_json(at) }))
                    .collect::<Vec<_>>(),
            }),
            Reply::Error(e) => json!({ "kind": "error", "message": e }),
            Reply::Usage(u) => json!({ "kind": "usage", "message": u }),
            Reply::Quit => json!({ "kind": "quit" }),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Run {
    /// Stopped before the entry function.
    Loaded,
    Stopped,
    Faulted,
    Exited,
}

struct Breakpoint {
    id: u32,
    at: NubCoord,
}

pub struct Session<T> {
    nub: Nub<T>,
    run: Run,
    /// The state of frame 0 at the current stop.
    top: NubState,
    selected: Option<(u32, NubState)>,
    breakpoints: Vec<Breakpoint>,
    next_id: u32,
    hits: Rc<Cell<u64>>,
}

pub const COMMANDS: &str = "run continue break clear spoints print bt frame quit";

fn parse_location(arg: &str) -> Option<(String, u16, u16)> {
    let (file, pos) = arg.rsplit_once(':')?;
    let (y, x) = match pos.split_once('.') {
        Some((y, x)) => (y.parse().ok()?, x.parse().ok()?),
        None => (pos.parse().ok()?, 0),
    };
    (!file.is_empty() && y > 0).then(|| (file.to_string(), y, x))
}

impl<T: Transport> Session<T> {
    /// Attach to a freshly started target, which stops before its entry
    /// function.
    pub fn start(mut nub: Nub<T>) -> Result<Self, NubError> {
        let startup: Callback = Rc::new(|_: &NubState, _: &mut dyn NubOps| {});
        let fault: Callback = Rc::new(|_: &NubState, _: &mut dyn NubOps| {});
        let top = nub.init(startup, fault)?;
        Ok(Session {
            nub,
            run: Run::Loaded,
            top,
            selected: None,
            breakpoints: Vec::new(),
            next_id: 1,
            hits: Rc::new(Cell::new(0)),
        })
    }

    /// What was loaded and where the target waits.
    pub fn banner(&self) -> Reply {
        Reply::Loaded { units: self.nub.manifest().len(), function: self.top.name(), at: self.top.src }
    }

    pub fn nub(&self) -> &Nub<T> {
        &self.nub
    }

    pub fn nub_mut(&mut self) -> &mut Nub<T> {
        &mut self.nub
    }

    /// Breakpoint handler invocations so far.
    pub fn hits(&self) -> u64 {
        self.hits.get()
    }

    pub fn is_finished(&self) -> bool {
        self.run == Run::Exited
    }

    /// Execute one command line.
    pub fn execute(&mut self, line: &str) -> Vec<Reply> {
        let mut words = line.split_whitespace();
        let Some(cmd) = words.next() else { return Vec::new() };
        let args: Vec<&str> = words.collect();
        let reply = match (cmd, args.as_slice()) {
            ("run" | "r", []) => match self.run {
                Run::Loaded | Run::Exited => self.resume(),
                _ => Reply::Error("the program is already running; use continue".into()),
            },
            ("continue" | "c", []) => match self.run {
                Run::Loaded => Reply::Error("the program is not running; use run".into()),
                _ => self.resume(),
            },
            ("break" | "b", [loc]) => self.set_break(loc),
            ("break" | "b", _) => Reply::Usage("break file:line[.column]".into()),
            ("clear", [loc]) => self.clear(loc),
            ("clear", _) => Reply::Usage("clear file:line[.column]".into()),
            ("spoints", []) => self.spoints(""),
            ("spoints", [file]) => self.spoints(file),
            ("spoints", _) => Reply::Usage("spoints [file]".into()),
            ("print" | "p", [name]) => self.print(name),
            ("print" | "p", _) => Reply::Usage("print name".into()),
            ("bt" | "where", []) => self.backtrace(),
            ("frame" | "f", [n]) => match n.parse() {
                Ok(n) => self.frame(n),
                Err(_) => Reply::Usage("frame n".into()),
            },
            ("frame" | "f", []) => self.frame(self.selected.as_ref().map_or(0, |s| s.0)),
            ("quit" | "q", []) => Reply::Quit,
            ("run" | "r" | "continue" | "c" | "bt" | "where" | "quit" | "q", _) => Reply::Usage(cmd.into()),
            ("frame" | "f", _) => Reply::Usage("frame n".into()),
            _ => Reply::Error(format!("unknown command '{cmd}'; commands: {COMMANDS}")),
        };
        vec![reply]
    }

    fn resume(&mut self) -> Reply {
        if self.run == Run::Exited {
            return Reply::Error("the program has exited".into());
        }
        self.selected = None;
        match self.nub.resume() {
            Ok(Event::Break(state)) => {
                self.run = Run::Stopped;
                let r = Reply::Stopped { function: state.name(), at: state.src };
                self.top = state;
                r
            }
            Ok(Event::Fault { kind, state, .. }) => {
                self.run = Run::Faulted;
                let r = Reply::Faulted {
                    kind,
                    function: state.as_ref().map(|s| s.name()),
                    at: state.as_ref().map(|s| s.src),
                };
                if let Some(s) = state {
                    self.top = s;
                }
                r
            }
            Ok(Event::Exit { code, balanced }) => {
                self.run = Run::Exited;
                Reply::Exited { code, balanced }
            }
            Err(e) => Reply::Error(e.to_string()),
        }
    }

    /// Resolve a `file:line[.column]` argument to one stopping point.
    fn locate(&self, loc: &str, usage: &str) -> Result<NubCoord, Reply> {
        let Some((file, y, x)) = parse_location(loc) else {
            return Err(Reply::Usage(usage.into()));
        };
        let pattern = NubCoord::new(&file, y, x);
        let mut points = Vec::new();
        if let Err(e) = self.nub.src(&pattern, |_, c| points.push(*c)) {
            return Err(Reply::Error(e.to_string()));
        }
        match points.len() {
            0 => Err(Reply::Error(format!("no stopping point at {loc}"))),
            1 => Ok(points[0]),
            _ => Err(Reply::Candidates { file, line: y, points }),
        }
    }

    fn set_break(&mut self, loc: &str) -> Reply {
        let at = match self.locate(loc, "break file:line[.column]") {
            Ok(at) => at,
            Err(r) => return r,
        };
        let hits = Rc::clone(&self.hits);
        let handler: Callback = Rc::new(move |_: &NubState, _: &mut dyn NubOps| hits.set(hits.get() + 1));
        match self.nub.set(&at, handler) {
            Ok(prev) => {
                let replaced = prev.is_some();
                let id = match self.breakpoints.iter().find(|b| b.at == at) {
                    Some(b) => b.id,
                    None => {
                        let id = self.next_id;
                        self.next_id += 1;
                        self.breakpoints.push(Breakpoint { id, at });
                        id
                    }
                };
                Reply::BreakSet { id, at, replaced }
            }
            Err(e) => Reply::Error(e.to_string()),
        }
    }

    fn clear(&mut self, loc: &str) -> Reply {
        let at = match self.locate(loc, "clear file:line[.column]") {
            Ok(at) => at,
            Err(r) => return r,
        };
        match self.nub.remove(&at) {
            Ok(Some(_)) => {
                let pos = self.breakpoints.iter().position(|b| b.at == at).expect("tracked breakpoint");
                let b = self.breakpoints.remove(pos);
                Reply::BreakCleared { id: b.id, at }
            }
            Ok(None) => Reply::NoBreakpoint { at },
            Err(e) => Reply::Error(e.to_string()),
        }
    }

    fn spoints(&self, file: &str) -> Reply {
        let mut points = Vec::new();
        match self.nub.src(&NubCoord::new(file, 0, 0), |i, c| points.push((i, *c))) {
            Ok(()) => Reply::Points(points),
            Err(e) => Reply::Error(e.to_string()),
        }
    }

    fn stopped(&self) -> Result<(), Reply> {
        match self.run {
            Run::Exited => Err(Reply::Error("the program has exited".into())),
            _ => Ok(()),
        }
    }

    fn print(&mut self, name: &str) -> Reply {
        if let Err(r) = self.stopped() {
            return r;
        }
        let state = self.selected.as_ref().map_or(&self.top, |s| &s.1).clone();
        match self.nub.resolve_value(&state, name) {
            Ok(Some(v)) => match format_value(&v.module, v.ty, &v.bytes) {
                Ok(text) => Reply::Value { name: name.into(), value: text },
                Err(e) => Reply::Error(format!("{name}: {e}")),
            },
            Ok(None) => Reply::NotVisible { name: name.into() },
            Err(e) => Reply::Error(e.to_string()),
        }
    }

    fn backtrace(&mut self) -> Reply {
        if let Err(r) = self.stopped() {
            return r;
        }
        if self.run == Run::Loaded {
            return Reply::Backtrace(vec![(0, self.top.name(), self.top.src)]);
        }
        let mut frames = Vec::new();
        let mut state = NubState::empty();
        for n in 0.. {
            match self.nub.frame(n, &mut state) {
                Ok(_) => frames.push((n, state.name(), state.src)),
                Err(NubError::Depth { .. }) => break,
                Err(e) => return Reply::Error(e.to_string()),
            }
        }
        Reply::Backtrace(frames)
    }

    fn frame(&mut self, n: u32) -> Reply {
        if let Err(r) = self.stopped() {
            return r;
        }
        if self.run == Run::Loaded {
            if n == 0 {
                return Reply::Frame { n, function: self.top.name(), at: self.top.src };
            }
            return Reply::Error(format!("no frame {n}; the stack has 1 frames"));
        }
        let mut state = NubState::empty();
        match self.nub.frame(n, &mut state) {
            Ok(_) => {
                let r = Reply::Frame { n, function: state.name(), at: state.src };
                self.selected = Some((n, state));
                r
            }
            Err(e) => Reply::Error(e.to_string()),
        }
    }
}
