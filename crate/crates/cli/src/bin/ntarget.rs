//! Run an image as a remote debugging target.

use std::net::TcpListener;
use std::path::PathBuf;
use std::process::ExitCode;

use cdb_core::comm::serve;
use cdb_core::vm::{Machine, TargetNub};
use cdb_lib::LoadedImage;
use clap::Parser;

#[derive(Parser)]
#[command(name = "ntarget", about = "Serve one debugger connection for a .nxe image")]
struct Args {
    /// Address to listen on, such as 127.0.0.1:7000; port 0 picks one.
    #[arg(long)]
    listen: String,
    image: PathBuf,
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    args: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let loaded = match LoadedImage::open(&args.image) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("ntarget: {e}");
            return ExitCode::FAILURE;
        }
    };
    let listener = match TcpListener::bind(&args.listen) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("ntarget: {}: {e}", args.listen);
            return ExitCode::FAILURE;
        }
    };
    match listener.local_addr() {
        Ok(a) => eprintln!("listening on {a}"),
        Err(e) => eprintln!("ntarget: {e}"),
    }
    let (stream, _) = match listener.accept() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("ntarget: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut argv = vec![args.image.display().to_string()];
    argv.extend(args.args);
    let machine = Machine::new(loaded.image, &argv, Box::new(std::io::stdin()), Box::new(std::io::stdout()));
    match serve(stream, &mut TargetNub::new(machine)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("ntarget: {e}");
            ExitCode::FAILURE
        }
    }
}
