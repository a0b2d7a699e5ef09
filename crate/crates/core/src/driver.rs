//! One-call compile and link helpers.

use std::io::{Read, Write};
use std::sync::Arc;

use thiserror::Error;

use crate::codegen::object::ObjectModule;
use crate::codegen::{compile_unit, uname_for, CodegenError, CompileOptions};
use crate::link::{link, LinkError, Linked};
use crate::comm::InProcess;
use crate::minic::{frontend, Diagnostic};
use crate::nub::{MemorySource, Nub};
use crate::vm::{Machine, TargetNub};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{}", .diagnostics.iter().map(|d| d.render(.file)).collect::<Vec<_>>().join("\n"))]
    Compile { file: String, diagnostics: Vec<Diagnostic> },
    #[error(transparent)]
    Codegen(#[from] CodegenError),
    #[error(transparent)]
    Link(#[from] LinkError),
}

/// Compile one unit. The uname hashes the file name and the source text.
pub fn compile_source(src: &str, file: &str, opts: CompileOptions) -> Result<ObjectModule, BuildError> {
    let (unit, plan) =
        frontend(src, file).map_err(|diagnostics| BuildError::Compile { file: file.into(), diagnostics })?;
    Ok(compile_unit(&unit, &plan, uname_for(file, src.as_bytes()), opts)?)
}

/// Compile `(file, source)` pairs and link them, entering at `main`.
pub fn build(sources: &[(&str, &str)], opts: CompileOptions) -> Result<Linked, BuildError> {
    let objs = sources
        .iter()
        .map(|(file, src)| compile_source(src, file, opts))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(link(&objs, "main")?)
}

/// Start `linked` on an in-process target. Program output goes to `output`.
pub fn launch(
    linked: &Linked,
    args: &[String],
    input: Box<dyn Read + Send>,
    output: Box<dyn Write + Send>,
) -> Nub<InProcess<TargetNub>> {
    let image = Arc::new(linked.image.clone());
    let machine = Machine::new(Arc::clone(&image), args, input, output);
    Nub::new(InProcess::new(TargetNub::new(machine)), &image, Box::new(MemorySource(linked.symfiles.clone())))
}
