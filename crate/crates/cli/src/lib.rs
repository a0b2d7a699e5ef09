//! Shared plumbing for the command-line tools.

pub mod repl;
pub mod web;

use std::fs::File;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use cdb_core::comm::{InProcess, TcpTransport, Transport};
use cdb_core::debugger::Session;
use cdb_core::link::ExecutableImage;
use cdb_core::nub::{DirSource, Nub};
use cdb_core::vm::{Machine, SharedBuf, TargetNub};

pub type AnySession = Session<Box<dyn Transport>>;

/// An image read from disk together with the directory of its symbol files.
#[derive(Clone)]
pub struct LoadedImage {
    pub path: PathBuf,
    pub image: Arc<ExecutableImage>,
    pub symdir: PathBuf,
}

impl LoadedImage {
    pub fn open(path: &Path) -> Result<Self, String> {
        let image = ExecutableImage::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Ok(LoadedImage { path: path.to_path_buf(), image: Arc::new(image), symdir: ExecutableImage::symfile_dir(path) })
    }

    fn nub(&self, transport: Box<dyn Transport>) -> Nub<Box<dyn Transport>> {
        Nub::new(transport, &self.image, Box::new(DirSource(self.symdir.clone())))
    }
}

/// Where the target runs and where its standard input comes from.
#[derive(Debug, Clone)]
pub enum Target {
    InProcess { args: Vec<String>, input: Option<PathBuf> },
    Remote(String),
}

/// Start a session. For an in-process target the returned buffer collects
/// the program's output.
pub fn start_session(loaded: &LoadedImage, target: &Target) -> Result<(AnySession, Option<SharedBuf>), String> {
    let (transport, out): (Box<dyn Transport>, _) = match target {
        Target::InProcess { args, input } => {
            let input: Box<dyn Read + Send> = match input {
                Some(p) => Box::new(File::open(p).map_err(|e| format!("{}: {e}", p.display()))?),
                None => Box::new(io::empty()),
            };
            let out = SharedBuf::default();
            let mut argv = vec![loaded.path.display().to_string()];
            argv.extend(args.iter().cloned());
            let machine = Machine::new(Arc::clone(&loaded.image), &argv, input, Box::new(out.clone()));
            (Box::new(InProcess::new(TargetNub::new(machine))), Some(out))
        }
        Target::Remote(addr) => {
            let t = TcpTransport::connect(addr.as_str()).map_err(|e| format!("{addr}: {e}"))?;
            (Box::new(t), None)
        }
    };
    let session = Session::start(loaded.nub(transport)).map_err(|e| e.to_string())?;
    Ok((session, out))
}
