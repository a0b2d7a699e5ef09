mod common;

use common::*;

#[test]
fn fact_recursion_backtrace() {
    let (mut s, out) = session(&fact(), b"");
    assert_eq!(transcript(&mut s, &["break fact.c:2"]), ["breakpoint 1 at fact.c:2.9"]);
    for k in 0..6 {
        let r = transcript(&mut s, &[if k == 0 { "run" } else { "continue" }, "print n"]);
        assert_eq!(r, ["stopped at fact fact.c:2.9".to_string(), format!("n = {}", 5 - k)]);
    }
    let bt = transcript(&mut s, &["bt"]);
    let lines: Vec<&str> = bt[0].lines().collect();
    assert_eq!(lines.len(), 7);
    assert_eq!(lines[0], "#0 fact fact.c:2.9");
    for (k, line) in lines.iter().enumerate().take(6).skip(1) {
        assert_eq!(*line, format!("#{k} fact fact.c:4.12"));
    }
    assert_eq!(lines[6], "#6 main fact.c:9.5");
    for k in 0..6u32 {
        let r = transcript(&mut s, &[&format!("frame {k}"), "print n"]);
        assert_eq!(r[1], format!("n = {k}"));
    }
    assert_eq!(transcript(&mut s, &["frame 6", "print r"])[0], "#6 main fact.c:9.5");
    assert!(transcript(&mut s, &["frame 7"])[0].starts_with("error:"));
    assert_eq!(transcript(&mut s, &["clear fact.c:2.9", "continue"]), [
        "cleared breakpoint 1 at fact.c:2.9",
        "exited with code 0"
    ]);
    assert_eq!(String::from_utf8(out.contents()).unwrap(), "120\n");
    assert!(s.is_finished());
    assert_eq!(s.hits(), 6);
}

#[test]
fn wf_session_text() {
    let (mut s, out) = session(&wf(), WF_INPUT);
    let r = transcript(
        &mut s,
        &[
            "print words",
            "break wf.c:17",
            "break wf.c:20",
            "run",
            "print c",
            "frame 1",
            "print buf",
            "print nosuch",
            "clear wf.c:20",
            "clear wf.c:20.9",
            "continue",
        ],
    );
    assert_eq!(r[0], "words = 0x0");
    assert_eq!(r[1], "wf.c:17 has 3 stopping points: wf.c:17.10 wf.c:17.19 wf.c:17.43; use file:line.column");
    assert_eq!(r[2], "breakpoint 1 at wf.c:20.9");
    assert_eq!(r[3], "stopped at getword wf.c:20.9");
    assert_eq!(r[4], "c = 0");
    assert_eq!(r[5], "#1 main wf.c:42.12");
    assert!(r[6].starts_with("buf = \"the\" {116, 104, 101, 0"), "{}", r[6]);
    assert_eq!(r[7], "nosuch: not visible");
    assert_eq!(r[8], "cleared breakpoint 1 at wf.c:20.9");
    assert_eq!(r[9], "no breakpoint at wf.c:20.9");
    assert_eq!(r[10], "exited with code 0");
    assert_eq!(String::from_utf8(out.contents()).unwrap(), "1 a\n2 cat\n1 dog\n2 the\n");
}

#[test]
fn json_replies_carry_kind() {
    let (mut s, _) = session(&fact(), b"");
    for cmd in ["break fact.c:4.12", "run", "print n", "bt", "frame 1", "print zz", "bogus", "spoints fact.c"] {
        for r in s.execute(cmd) {
            let j = r.to_json();
            assert!(j["kind"].is_string(), "{cmd}: {j}");
        }
    }
    s.execute("frame 0");
    let j = s.execute("print n")[0].to_json();
    assert_eq!(j, serde_json::json!({ "kind": "value", "name": "n", "value": "5" }));
}

#[test]
fn usage_and_state_errors() {
    let (mut s, _) = session(&fact(), b"");
    let r = transcript(&mut s, &["continue", "break", "break fact.c", "break nowhere.c:1", "frame x", "xyzzy"]);
    assert_eq!(r[0], "error: the program is not running; use run");
    assert_eq!(r[1], "usage: break file:line[.column]");
    assert_eq!(r[2], "usage: break file:line[.column]");
    assert_eq!(r[3], "error: no stopping point at nowhere.c:1");
    assert_eq!(r[4], "usage: frame n");
    assert!(r[5].starts_with("error: unknown command 'xyzzy'"));
    assert_eq!(transcript(&mut s, &["run", "run", "print n"]), [
        "exited with code 0",
        "error: the program has exited",
        "error: the program has exited"
    ]);
}

#[test]
fn values_of_each_kind() {
    let enums = common::corpus().into_iter().find(|(f, _)| f == "09_enum.c").unwrap();
    let linked = cdb_core::driver::build(&[(&enums.0, &enums.1)], Default::default()).unwrap();
    let (mut s, _) = session(&linked, b"");
    let r = transcript(&mut s, &["break 09_enum.c:11", "run", "print c", "print GREEN", "print ops", "print a"]);
    assert_eq!(r[1], "stopped at apply 09_enum.c:11.12");
    assert_eq!(r[2], "c = RED");
    assert_eq!(r[3], "GREEN = GREEN");
    assert_eq!(r[4], "ops = {0xc0000000, 0xc0000010, 0xc0000020}");
    assert_eq!(r[5], "a = 12");

    let bits = common::corpus().into_iter().find(|(f, _)| f == "06_bits.c").unwrap();
    let linked = cdb_core::driver::build(&[(&bits.0, &bits.1)], Default::default()).unwrap();
    let (mut s, _) = session(&linked, b"");
    let r = transcript(&mut s, &["break 06_bits.c:22.5", "run", "print p", "print u", "print s"]);
    assert_eq!(r[2], "p = {lo = 13, mid = -9, hi = 100}");
    assert_eq!(r[3], "u = 3735928559");
    assert_eq!(r[4], "s = -1000");
}
