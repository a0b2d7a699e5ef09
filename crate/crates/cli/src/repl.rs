//! The line-oriented front end of `cdb`.

use std::io::{self, BufRead, Write};

use cdb_core::comm::Transport;
use cdb_core::debugger::{Reply, Session};
use cdb_core::vm::SharedBuf;
use serde_json::json;

#[derive(Debug, Clone, Copy, Default)]
pub struct ReplOptions {
    pub json: bool,
    pub prompt: bool,
}

/// Program output captured since the last call, as a reply-like object.
pub fn output_json(bytes: &[u8]) -> serde_json::Value {
    json!({ "kind": "output", "text": String::from_utf8_lossy(bytes) })
}

fn emit(out: &mut dyn Write, opts: ReplOptions, reply: &Reply) -> io::Result<()> {
    if opts.json {
        writeln!(out, "{}", reply.to_json())
    } else {
        match reply.to_text() {
            t if t.is_empty() => Ok(()),
            t => writeln!(out, "{t}"),
        }
    }
}

fn flush_target(out: &mut dyn Write, opts: ReplOptions, target: Option<&SharedBuf>) -> io::Result<()> {
    let Some(buf) = target else { return Ok(()) };
    let bytes = buf.take();
    if bytes.is_empty() {
        return Ok(());
    }
    if opts.json {
        writeln!(out, "{}", output_json(&bytes))
    } else {
        out.write_all(&bytes)
    }
}

/// Read commands until `quit` or end of input.
pub fn run<T: Transport>(
    session: &mut Session<T>,
    input: impl BufRead,
    out: &mut dyn Write,
    opts: ReplOptions,
    target: Option<&SharedBuf>,
) -> io::Result<()> {
    emit(out, opts, &session.banner())?;
    let mut lines = input.lines();
    loop {
        if opts.prompt {
            write!(out, "(cdb) ")?;
            out.flush()?;
        }
        let Some(line) = lines.next().transpose()? else { break };
        let replies = session.execute(&line);
        flush_target(out, opts, target)?;
        let quit = replies.contains(&Reply::Quit);
        for r in &replies {
            emit(out, opts, r)?;
        }
        out.flush()?;
        if quit {
            break;
        }
    }
    Ok(())
}
