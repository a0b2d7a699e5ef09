//! `cdb --remote` against `ntarget` matches the in-process debugger.

mod common;

use std::io::{Read, Write};

use common::*;
use serde_json::Value;

fn replies(stdout: &[u8]) -> (Vec<Value>, String) {
    let mut program = String::new();
    let mut rest = Vec::new();
    for line in String::from_utf8_lossy(stdout).lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        if v["kind"] == "output" {
            program.push_str(v["text"].as_str().unwrap());
        } else {
            rest.push(v);
        }
    }
    (rest, program)
}

#[test]
fn remote_transcript_matches_in_process() {
    let dir = tempfile::tempdir().unwrap();
    let image = build(dir.path(), &["wf.c", "lookup.c"], "wf.nxe");
    let input = dir.path().join("in.txt");
    std::fs::write(&input, "the cat the\n").unwrap();

    let local = cdb(&["--json", "--input", input.to_str().unwrap(), image.to_str().unwrap()], SCRIPT);
    assert!(local.status.success());
    let (local_replies, local_program) = replies(&local.stdout);

    let (mut target, banner) = spawn_announcing(tool("ntarget").args(["--listen", "127.0.0.1:0"]).arg(&image), true);
    let addr = banner.strip_prefix("listening on ").unwrap().to_string();
    target.stdin.take().unwrap().write_all(b"the cat the\n").unwrap();
    let remote = cdb(&["--json", "--remote", &addr, image.to_str().unwrap()], SCRIPT);
    assert!(remote.status.success(), "{}", String::from_utf8_lossy(&remote.stderr));
    let (remote_replies, _) = replies(&remote.stdout);
    let mut target_out = String::new();
    target.stdout.take().unwrap().read_to_string(&mut target_out).unwrap();
    assert!(target.wait().unwrap().success());

    assert_eq!(local_replies.len(), 18);
    assert_eq!(local_replies, remote_replies);
    assert_eq!(local_program, "1 cat\n2 the\n");
    assert_eq!(target_out, local_program);
}
