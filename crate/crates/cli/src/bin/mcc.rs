//! Compile MiniC units to object files plus `<uname>.sym` symbol files.

use std::path::PathBuf;
use std::process::ExitCode;

use cdb_core::codegen::CompileOptions;
use cdb_core::driver::compile_source;
use clap::Parser;

#[derive(Parser)]
#[command(name = "mcc", about = "Compile MiniC source files to .obj and .sym files")]
struct Args {
    /// Output object file; only with a single input.
    #[arg(short = 'o')]
    output: Option<PathBuf>,
    /// Omit breakpoint and shadow-stack instrumentation.
    #[arg(long)]
    no_instrument: bool,
    #[arg(required = true)]
    files: Vec<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    if args.output.is_some() && args.files.len() > 1 {
        eprintln!("mcc: -o needs exactly one input file");
        return ExitCode::from(2);
    }
    let opts = CompileOptions { instrument: !args.no_instrument };
    let mut failed = false;
    for file in &args.files {
        let src = match std::fs::read_to_string(file) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("mcc: {}: {e}", file.display());
                failed = true;
                continue;
            }
        };
        let name = file.file_name().map_or_else(|| file.display().to_string(), |n| n.to_string_lossy().into_owned());
        let obj = match compile_source(&src, &name, opts) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("{e}");
                failed = true;
                continue;
            }
        };
        let out = args.output.clone().unwrap_or_else(|| file.with_extension("obj"));
        let sym = out.parent().map(PathBuf::from).unwrap_or_default().join(obj.symfile_name());
        if let Err(e) = std::fs::write(&sym, &obj.symfile) {
            eprintln!("mcc: {}: {e}", sym.display());
            failed = true;
        } else if let Err(e) = obj.write(&out) {
            eprintln!("mcc: {}: {e}", out.display());
            failed = true;
        }
    }
    if failed {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
