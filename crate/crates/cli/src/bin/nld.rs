//! Link object files into an executable image.

use std::path::PathBuf;
use std::process::ExitCode;

use cdb_core::codegen::object::ObjectModule;
use cdb_core::link::link;
use clap::Parser;

#[derive(Parser)]
#[command(name = "nld", about = "Link .obj files into a .nxe image; symbol files are written beside it")]
struct Args {
    #[arg(short = 'o', default_value = "a.nxe")]
    output: PathBuf,
    /// Entry function.
    #[arg(long, default_value = "main")]
    entry: String,
    #[arg(required = true)]
    objects: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut objs = Vec::new();
    for path in &args.objects {
        match ObjectModule::read(path) {
            Ok(o) => objs.push(o),
            Err(e) => {
                eprintln!("nld: {}: {e}", path.display());
                return ExitCode::FAILURE;
            }
        }
    }
    let linked = match link(&objs, &args.entry) {
        Ok(l) => l,
        Err(e) => {
            eprintln!("nld: {e}");
            return ExitCode::FAILURE;
        }
    };
    if let Err(e) = linked.write(&args.output) {
        eprintln!("nld: {}: {e}", args.output.display());
        return ExitCode::FAILURE;
    }
    ExitCode::SUCCESS
}
