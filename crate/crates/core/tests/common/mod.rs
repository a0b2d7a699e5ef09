#![allow(dead_code)]

pub mod gen;

use std::path::{Path, PathBuf};

use cdb_core::codegen::CompileOptions;
use cdb_core::comm::InProcess;
use cdb_core::debugger::Session;
use cdb_core::driver::{build, launch};
use cdb_core::link::Linked;
use cdb_core::nub::Nub;
use cdb_core::vm::{SharedBuf, TargetNub};

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn read(name: &str) -> String {
    std::fs::read_to_string(fixture_dir().join(name)).unwrap()
}

pub fn build_files(names: &[&str]) -> Linked {
    let srcs: Vec<(String, String)> = names
        .iter()
        .map(|n| (Path::new(n).file_name().unwrap().to_str().unwrap().to_string(), read(n)))
        .collect();
    let refs: Vec<(&str, &str)> = srcs.iter().map(|(f, s)| (f.as_str(), s.as_str())).collect();
    build(&refs, CompileOptions::default()).unwrap()
}

pub fn wf() -> Linked {
    build_files(&["wf.c", "lookup.c"])
}

pub fn fact() -> Linked {
    build_files(&["fact.c"])
}

pub fn corpus() -> Vec<(String, String)> {
    let mut names: Vec<_> = std::fs::read_dir(fixture_dir().join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    names.sort();
    names
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_str().unwrap().to_string(), std::fs::read_to_string(&p).unwrap()))
        .collect()
}

pub const WF_INPUT: &[u8] = b"the cat the\ndog, a cat!\n";

pub type LocalNub = Nub<InProcess<TargetNub>>;

pub fn nub(linked: &Linked, input: &'static [u8]) -> (LocalNub, SharedBuf) {
    let out = SharedBuf::default();
    (launch(linked, &["prog".into()], Box::new(input), Box::new(out.clone())), out)
}

pub fn session(linked: &Linked, input: &'static [u8]) -> (Session<InProcess<TargetNub>>, SharedBuf) {
    let (n, out) = nub(linked, input);
    (Session::start(n).unwrap(), out)
}

/// Run `cmds` and return the text of every reply, one line per command.
pub fn transcript<T: cdb_core::comm::Transport>(s: &mut Session<T>, cmds: &[&str]) -> Vec<String> {
    cmds.iter().flat_map(|c| s.execute(c)).map(|r| r.to_text()).collect()
}

pub type AnyNub = Nub<Box<dyn cdb_core::comm::Transport>>;

/// Which side of a socket the target runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    InProcess,
    Tcp,
}

pub const MODES: [Mode; 2] = [Mode::InProcess, Mode::Tcp];

/// Start `linked` in `mode`. A TCP target runs on its own thread and ends
/// when the debugger side disconnects.
pub fn any_nub(linked: &Linked, input: &'static [u8], mode: Mode) -> (AnyNub, SharedBuf) {
    use std::sync::Arc;

    use cdb_core::comm::{serve, TcpTransport, Transport};
    use cdb_core::nub::MemorySource;
    use cdb_core::vm::Machine;

    let out = SharedBuf::default();
    let image = Arc::new(linked.image.clone());
    let args = vec!["prog".to_string()];
    let transport: Box<dyn Transport> = match mode {
        Mode::InProcess => {
            let machine = Machine::new(Arc::clone(&image), &args, Box::new(input), Box::new(out.clone()));
            Box::new(cdb_core::comm::InProcess::new(TargetNub::new(machine)))
        }
        Mode::Tcp => {
            let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
            let addr = listener.local_addr().unwrap();
            let (img, sink) = (Arc::clone(&image), out.clone());
            std::thread::spawn(move || {
                let (stream, _) = listener.accept().unwrap();
                let machine = Machine::new(img, &args, Box::new(input), Box::new(sink));
                let _ = serve(stream, &mut TargetNub::new(machine));
            });
            Box::new(TcpTransport::connect(addr).unwrap())
        }
    };
    (Nub::new(transport, &image, Box::new(MemorySource(linked.symfiles.clone()))), out)
}
