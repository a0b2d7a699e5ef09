mod common;

use std::io::Write;
use std::process::Stdio;

use common::*;

#[test]
fn compile_link_run() {
    let dir = tempfile::tempdir().unwrap();
    let image = build(dir.path(), &["wf.c", "lookup.c"], "wf.nxe");
    let syms: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.path().extension().is_some_and(|x| x == "sym"))
        .collect();
    assert_eq!(syms.len(), 2);
    let mut child = tool("nrun").arg(&image).stdin(Stdio::piped()).stdout(Stdio::piped()).spawn().unwrap();
    child.stdin.take().unwrap().write_all(b"b a b\n").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "1 a\n2 b\n");
}

#[test]
fn exit_codes_and_faults_propagate() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("three.c"), "int main(int argc, char *argv[]) { return argc + 1; }\n").unwrap();
    let image = build(dir.path(), &["three.c"], "three.nxe");
    let out = tool("nrun").arg(&image).args(["x", "y"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));

    std::fs::write(dir.path().join("div.c"), "int main(void) { int z; z = 0; return 1 / z; }\n").unwrap();
    let image = build(dir.path(), &["div.c"], "div.nxe");
    let out = tool("nrun").arg(&image).output().unwrap();
    assert_eq!(out.status.code(), Some(255));
    assert!(String::from_utf8_lossy(&out.stderr).contains("fault: divide by zero"), "{out:?}");
}

#[test]
fn compile_and_link_errors() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.c");
    std::fs::write(&bad, "int main(void) { return x; }\n").unwrap();
    let out = tool("mcc").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.c:1."), "{out:?}");
    assert!(!dir.path().join("bad.obj").exists());

    let lib = dir.path().join("lib.c");
    std::fs::write(&lib, "int f(void) { return 1; }\n").unwrap();
    ok(tool("mcc").arg(&lib));
    let out = tool("nld").arg("-o").arg(dir.path().join("x.nxe")).arg(dir.path().join("lib.obj")).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("main"), "{out:?}");
}

#[test]
fn scripted_session_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let image = build(dir.path(), &["wf.c", "lookup.c"], "wf.nxe");
    let input = dir.path().join("in.txt");
    std::fs::write(&input, "the cat the\n").unwrap();
    let args = ["--input", input.to_str().unwrap(), image.to_str().unwrap()];
    let a = cdb(&args, SCRIPT);
    let b = cdb(&args, SCRIPT);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "loaded 2 units; stopped before main wf.c:40.5");
    assert!(lines[1].starts_with("wf.c:17 has 3 stopping points"));
    assert_eq!(lines[3], "stopped at getword wf.c:20.9");
    assert!(text.contains("nosuch: not visible"));
    assert!(text.contains("1 cat\n2 the\nexited with code 0"), "{text}");
}

#[test]
fn stats_report() {
    let dir = tempfile::tempdir().unwrap();
    let image = build(dir.path(), &["wf.c", "lookup.c"], "wf.nxe");
    let out = ok(tool("cdb").arg("--stats").arg(&image));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("2 module records"), "{text}");
    assert!(text.lines().any(|l| l.starts_with("breakpoint flags") && l.ends_with(" 37")), "{text}");
    let sym = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .find(|e| e.path().extension().is_some_and(|x| x == "sym"))
        .unwrap();
    std::fs::remove_file(sym.path()).unwrap();
    let out = ok(tool("cdb").arg("--stats").arg(&image));
    assert!(String::from_utf8(out.stdout).unwrap().contains("symbol file absent"));
}
