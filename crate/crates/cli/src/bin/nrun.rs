//! Run an image with host standard input and output.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cdb_core::vm::{Machine, Stop};
use cdb_lib::LoadedImage;
use clap::Parser;

#[derive(Parser)]
#[command(name = "nrun", about = "Run a .nxe image; its exit code becomes ours")]
struct Args {
    image: PathBuf,
    /// Arguments passed to the program.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
    args: Vec<String>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let loaded = match LoadedImage::open(&args.image) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("nrun: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut argv = vec![args.image.display().to_string()];
    argv.extend(args.args);
    let mut m = Machine::new(loaded.image, &argv, Box::new(std::io::stdin()), Box::new(std::io::stdout()));
    let code = loop {
        match m.run() {
            Stop::Break { .. } => continue,
            Stop::Exit { code, .. } => break code,
            Stop::Fault { kind, addr } => {
                let _ = std::io::stdout().flush();
                eprintln!("nrun: fault: {} at {addr:#x}", kind.describe());
                break -1;
            }
        }
    };
    let _ = std::io::stdout().flush();
    ExitCode::from(code as u8)
}
