//! The debugger.

use std::io::{self, IsTerminal};
use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use cdb_core::debugger::StatsReport;
use cdb_lib::repl::{self, ReplOptions};
use cdb_lib::{start_session, web, LoadedImage, Target};
use clap::Parser;

#[derive(Parser)]
#[command(name = "cdb", about = "Debug a .nxe image; commands are read from standard input")]
struct Args {
    /// Debug a target started by `ntarget --listen`.
    #[arg(long, value_name = "HOST:PORT", conflicts_with = "in_process")]
    remote: Option<String>,
    /// Run the target inside the debugger (the default).
    #[arg(long)]
    in_process: bool,
    /// One JSON object per reply instead of text.
    #[arg(long)]
    json: bool,
    /// Serve the JSON replies over a websocket, plus static assets.
    #[arg(long, value_name = "PORT")]
    serve: Option<u16>,
    /// Directory of static assets for --serve.
    #[arg(long, requires = "serve")]
    assets: Option<PathBuf>,
    /// Print the size of the debugging data and exit.
    #[arg(long)]
    stats: bool,
    /// Standard input for an in-process target.
    #[arg(long, conflicts_with = "remote")]
    input: Option<PathBuf>,
    image: PathBuf,
    /// Arguments passed to an in-process target.
    #[arg(last = true)]
    args: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let loaded = match LoadedImage::open(&args.image) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("cdb: {e}");
            return ExitCode::FAILURE;
        }
    };
    if args.stats {
        let report = StatsReport::compute(&loaded.image, |uname| {
            let entry = loaded.image.manifest.iter().find(|e| e.uname == uname)?;
            std::fs::read(loaded.symdir.join(&entry.symfile)).ok()
        });
        print!("{report}");
        return ExitCode::SUCCESS;
    }
    let target = match args.remote {
        Some(addr) => Target::Remote(addr),
        None => Target::InProcess { args: args.args, input: args.input },
    };
    if let Some(port) = args.serve {
        let listener = match TcpListener::bind(("127.0.0.1", port)) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("cdb: port {port}: {e}");
                return ExitCode::FAILURE;
            }
        };
        if let Ok(a) = listener.local_addr() {
            println!("serving http://{a}/");
        }
        let factory: web::SessionFactory = Arc::new(move || start_session(&loaded, &target));
        return match web::serve(listener, factory, args.assets) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("cdb: {e}");
                ExitCode::FAILURE
            }
        };
    }
    let (mut session, out) = match start_session(&loaded, &target) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("cdb: {e}");
            return ExitCode::FAILURE;
        }
    };
    let stdin = io::stdin();
    let opts = ReplOptions { json: args.json, prompt: stdin.is_terminal() && !args.json };
    match repl::run(&mut session, stdin.lock(), &mut io::stdout().lock(), opts, out.as_ref()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cdb: {e}");
            ExitCode::FAILURE
        }
    }
}
