#![allow(dead_code)]

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name)
}

pub fn tool(name: &str) -> Command {
    Command::new(match name {
        "mcc" => env!("CARGO_BIN_EXE_mcc"),
        "nld" => env!("CARGO_BIN_EXE_nld"),
        "nrun" => env!("CARGO_BIN_EXE_nrun"),
        "ntarget" => env!("CARGO_BIN_EXE_ntarget"),
        "cdb" => env!("CARGO_BIN_EXE_cdb"),
        other => panic!("no tool {other}"),
    })
}

pub fn ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{cmd:?}: {}", String::from_utf8_lossy(&out.stderr));
    out
}

/// Compile and link fixtures into `dir`, returning the image path.
pub fn build(dir: &Path, sources: &[&str], image: &str) -> PathBuf {
    let mut objs = Vec::new();
    for s in sources {
        let src = dir.join(s);
        if !src.exists() {
            std::fs::copy(fixture(s), &src).unwrap();
        }
        ok(tool("mcc").arg(&src));
        objs.push(src.with_extension("obj"));
    }
    let out = dir.join(image);
    ok(tool("nld").arg("-o").arg(&out).args(&objs));
    out
}

/// Run `cdb` with `script` on standard input.
pub fn cdb(args: &[&str], script: &str) -> Output {
    let mut child = tool("cdb").args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(script.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

/// Spawn a server and return it with the first line it prints on `stream`.
pub fn spawn_announcing(cmd: &mut Command, on_stderr: bool) -> (Child, String) {
    let mut child = if on_stderr {
        cmd.stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped()).spawn().unwrap()
    } else {
        cmd.stdin(Stdio::null()).stdout(Stdio::piped()).stderr(Stdio::inherit()).spawn().unwrap()
    };
    let mut line = String::new();
    if on_stderr {
        BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    } else {
        let mut r = BufReader::new(child.stdout.take().unwrap());
        r.read_line(&mut line).unwrap();
    }
    (child, line.trim().to_string())
}

pub const SCRIPT: &str = "break wf.c:17\nbreak wf.c:20\nrun\nprint c\nbt\nframe 1\nprint buf\nprint nosuch\n\
clear wf.c:20\nbreak lookup.c:8.12\ncontinue\nbt\nprint words\nclear lookup.c:8.12\ncontinue\ncontinue\nquit\n";
