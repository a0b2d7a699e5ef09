//! One PASS/FAIL line per acceptance criterion, each with a pinned time
//! limit. Run with `--nocapture` to see the report.

mod common;

use std::cell::Cell;
use std::rc::Rc;
use std::sync::Arc;
use std::time::{Duration, Instant};

use cdb_core::codegen::CompileOptions;
use cdb_core::debugger::{format_value, Session};
use cdb_core::driver::{build, compile_source};
use cdb_core::nub::{Callback, Event, NubCoord, NubError, NubOps, NubState};
use cdb_core::symtab::{
    from_bytes, to_bytes, visible_chain, EnumItem, FieldRec, Item, SymModule, SymbolKind, TypeNode, Uid,
};
use cdb_core::vm::{run_image, Stop};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::*;

type Check = Result<String, String>;

/// Name, time limit in milliseconds, check.
type Criterion = (&'static str, u64, Box<dyn Fn() -> Check>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn noop() -> Callback {
    Rc::new(|_: &NubState, _: &mut dyn NubOps| {})
}

fn counter(c: &Rc<Cell<u32>>) -> Callback {
    let c = Rc::clone(c);
    Rc::new(move |_: &NubState, _: &mut dyn NubOps| c.set(c.get() + 1))
}

fn stopping_points() -> Check {
    let obj = compile_source(&read("wf.c"), "wf.c", CompileOptions::default()).map_err(|e| e.to_string())?;
    let m = from_bytes(&obj.symfile).map_err(|e| e.to_string())?;
    let got: Vec<(u32, u32)> = m.spoints.iter().map(|p| (p.src.y, p.src.x)).collect();
    ensure(got[..8].iter().all(|&(y, _)| (4..=10).contains(&y)), || format!("isletter points {:?}", &got[..8]))?;
    let want = [
        (12, 31),
        (15, 12),
        (15, 37),
        (16, 9),
        (17, 10),
        (17, 19),
        (17, 43),
        (18, 9),
        (19, 5),
        (20, 9),
        (21, 16),
        (22, 12),
    ];
    ensure(got[8..20] == want, || format!("getword points {:?}", &got[8..20]))?;
    Ok("points 8-19 match, 10 = && operand, 11 = empty statement".into())
}

fn scope_chain() -> Check {
    let obj = compile_source(&read("wf.c"), "wf.c", CompileOptions::default()).map_err(|e| e.to_string())?;
    let m = from_bytes(&obj.symfile).map_err(|e| e.to_string())?;
    let c = m
        .symbols()
        .find(|s| s.id == "c" && matches!(s.kind, SymbolKind::Local { .. }))
        .ok_or("no local c")?;
    let ids: Vec<&str> =
        visible_chain(&m, c.uid).map_err(|e| format!("{e:?}"))?.iter().map(|s| s.id.as_str()).collect();
    let want = ["c", "s", "buf", "words", "main", "tprint", "getword", "isletter"];
    ensure(ids == want, || format!("chain {ids:?}"))?;
    let g = m.symbol(m.globals).map(|s| s.id.as_str());
    ensure(g == Some("words"), || format!("globals names {g:?}"))?;
    Ok(ids.join(" "))
}

fn pickles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut corrupted = 0;
    for i in 0..1000 {
        let u = gen::unit(&mut rng, &format!("m{i}"), i % 2 == 0, &[]);
        let obj = compile_source(&u.source, &u.file, CompileOptions::default()).map_err(|e| e.to_string())?;
        let m = from_bytes(&obj.symfile).map_err(|e| format!("module {i}: {e}"))?;
        m.validate().map_err(|e| format!("module {i}: {e:?}"))?;
        let bytes = to_bytes(&m);
        ensure(bytes == to_bytes(&m) && bytes == obj.symfile, || format!("module {i} not deterministic"))?;
        ensure(from_bytes(&bytes).ok().as_ref() == Some(&m), || format!("module {i} does not round-trip"))?;
        if i % 10 == 0 {
            let mut bad = bytes.clone();
            let at = rng.gen_range(0..bad.len());
            bad[at] ^= rng.gen_range(1..=255u8);
            ensure(from_bytes(&bad).is_err(), || format!("module {i}: corruption at byte {at} accepted"))?;
            corrupted += 1;
        }
    }
    Ok(format!("1000 modules round-trip, {corrupted} corruptions rejected"))
}

fn breakpoints(mode: Mode) -> Check {
    let fact = fact();
    // Stop before evaluation: print_int(r) has not run, putchar has not run.
    let (mut n, out) = any_nub(&fact, b"", mode);
    n.init(noop(), noop()).map_err(|e| e.to_string())?;
    n.set(&NubCoord::new("fact.c", 10, 5), noop()).map_err(|e| e.to_string())?;
    n.set(&NubCoord::new("fact.c", 11, 5), noop()).map_err(|e| e.to_string())?;
    let mut seen = Vec::new();
    for _ in 0..2 {
        match n.resume().map_err(|e| e.to_string())? {
            Event::Break(st) => seen.push((st.src.y, String::from_utf8_lossy(&out.contents()).into_owned())),
            other => return Err(format!("expected a break, got {other:?}")),
        }
    }
    ensure(seen == [(10, String::new()), (11, "120".to_string())], || format!("stops {seen:?}"))?;

    // Set then cleared: no stop and the same transcript as never set.
    let (mut n, cleared_out) = any_nub(&fact, b"", mode);
    n.init(noop(), noop()).map_err(|e| e.to_string())?;
    let at = NubCoord::new("fact.c", 2, 9);
    n.set(&at, noop()).map_err(|e| e.to_string())?;
    n.remove(&at).map_err(|e| e.to_string())?;
    let ev = n.resume().map_err(|e| e.to_string())?;
    ensure(matches!(ev, Event::Exit { code: 0, .. }), || format!("cleared breakpoint stopped: {ev:?}"))?;
    let (_, never) = run_image(Arc::new(fact.image.clone()), &["prog".into()], b"");
    ensure(cleared_out.contents() == never, || "transcript differs from never-set".into())?;

    // Shared flag index 5: wf.c 7.21 and lookup.c 8.12.
    let wf = wf();
    let (a, b) = (Rc::new(Cell::new(0)), Rc::new(Cell::new(0)));
    let (mut n, _) = any_nub(&wf, WF_INPUT, mode);
    n.init(noop(), noop()).map_err(|e| e.to_string())?;
    n.set(&NubCoord::new("wf.c", 7, 21), counter(&a)).map_err(|e| e.to_string())?;
    n.set(&NubCoord::new("lookup.c", 8, 12), counter(&b)).map_err(|e| e.to_string())?;
    while let Event::Break(_) = n.resume().map_err(|e| e.to_string())? {}
    let (a_arrivals, b_arrivals) = (a.get(), b.get());

    let only_b = Rc::new(Cell::new(0));
    let (mut n, _) = any_nub(&wf, WF_INPUT, mode);
    n.init(noop(), noop()).map_err(|e| e.to_string())?;
    n.set(&NubCoord::new("lookup.c", 8, 12), counter(&only_b)).map_err(|e| e.to_string())?;
    let mut events = 0;
    loop {
        match n.resume().map_err(|e| e.to_string())? {
            Event::Break(st) => {
                ensure(st.src.file_name() == "lookup.c", || format!("event from {}", st.src))?;
                events += 1;
            }
            Event::Exit { .. } => break,
            other => return Err(format!("{other:?}")),
        }
    }
    ensure(a_arrivals > 0 && events == b_arrivals && only_b.get() == b_arrivals, || {
        format!("B arrivals {b_arrivals}, events {events}")
    })?;
    ensure(n.dismissed() == a_arrivals as u64, || format!("dismissed {} of {a_arrivals}", n.dismissed()))?;
    Ok(format!("{events} events for B, {a_arrivals} arrivals in A dismissed"))
}

fn bpflags() -> Check {
    let wf = wf();
    ensure(wf.image.bpflags_len == 37, || format!("wf.c+lookup.c flags {}", wf.image.bpflags_len))?;
    let mut rng = ChaCha8Rng::seed_from_u64(37);
    for i in 0..200 {
        let units = gen::program(&mut rng, 1 + i % 4);
        let srcs: Vec<(&str, &str)> = units.iter().map(|u| (u.file.as_str(), u.source.as_str())).collect();
        let l = build(&srcs, CompileOptions::default()).map_err(|e| e.to_string())?;
        let max = l.image.manifest.iter().map(|e| e.spoint_count).max().unwrap_or(0);
        ensure(l.image.bpflags_len == max, || format!("link {i}: {} flags, max {max}", l.image.bpflags_len))?;
    }
    Ok("37 for wf.c+lookup.c, 200 random links sized to the largest unit".into())
}

fn shadow_stack(mode: Mode) -> Check {
    let (mut n, _) = any_nub(&fact(), b"", mode);
    n.init(noop(), noop()).map_err(|e| e.to_string())?;
    let hits = Rc::new(Cell::new(0));
    n.set(&NubCoord::new("fact.c", 2, 9), counter(&hits)).map_err(|e| e.to_string())?;
    while hits.get() < 6 {
        n.resume().map_err(|e| e.to_string())?;
    }
    let d = 5;
    let mut st = NubState::empty();
    for k in 0..=d {
        n.frame(k, &mut st).map_err(|e| e.to_string())?;
        let want = if k == 0 { NubCoord::new("fact.c", 2, 9) } else { NubCoord::new("fact.c", 4, 12) };
        ensure(st.name() == "fact" && st.src == want, || format!("frame {k}: {} {}", st.name(), st.src))?;
    }
    n.frame(d + 1, &mut st).map_err(|e| e.to_string())?;
    ensure(st.name() == "main" && st.src == NubCoord::new("fact.c", 9, 5), || format!("frame {}: {}", d + 1, st.src))?;
    let err = n.frame(d + 2, &mut st);
    ensure(matches!(err, Err(NubError::Depth { .. })), || format!("frame {}: {err:?}", d + 2))?;
    n.remove(&NubCoord::new("fact.c", 2, 9)).map_err(|e| e.to_string())?;
    let ev = n.resume().map_err(|e| e.to_string())?;
    ensure(matches!(ev, Event::Exit { code: 0, balanced: Some(true) }), || format!("{ev:?}"))?;
    Ok("frames 0-5 fact, 6 main, 7 errors, stack balanced".into())
}

fn transparency() -> Check {
    for (file, src) in corpus() {
        let run = |instrument| {
            let l = build(&[(&file, &src)], CompileOptions { instrument }).map_err(|e| e.to_string())?;
            Ok::<_, String>(run_image(Arc::new(l.image), &["prog".into(), "x".into()], b"hello there\nabc\n"))
        };
        let (stop_off, out_off) = run(false)?;
        let (stop_on, out_on) = run(true)?;
        ensure(out_off == out_on, || format!("{file}: output differs"))?;
        let same = matches!((&stop_off, &stop_on),
            (Stop::Exit { code: a, .. }, Stop::Exit { code: b, balanced: Some(true) }) if a == b);
        ensure(same, || format!("{file}: {stop_off:?} vs {stop_on:?}"))?;
    }
    Ok("10 programs byte-identical".into())
}

const SCRIPT: [&str; 20] = [
    "spoints lookup.c",
    "print words",
    "break wf.c:17",
    "break wf.c:20",
    "break lookup.c:8.12",
    "run",
    "print c",
    "bt",
    "frame 1",
    "print buf",
    "print nosuch",
    "clear wf.c:20",
    "continue",
    "bt",
    "frame 2",
    "print argv",
    "print words",
    "clear lookup.c:8.12",
    "continue",
    "continue",
];

fn transports() -> Check {
    let wf = wf();
    let mut transcripts = Vec::new();
    for mode in MODES {
        let (n, out) = any_nub(&wf, WF_INPUT, mode);
        let mut s = Session::start(n).map_err(|e| e.to_string())?;
        let mut t = transcript(&mut s, &SCRIPT).join("\n");
        t.push_str(&String::from_utf8_lossy(&out.contents()));
        transcripts.push(t);
    }
    ensure(transcripts[0] == transcripts[1], || "transcripts differ".into())?;
    Ok(format!("{} bytes identical", transcripts[0].len()))
}

fn formatting() -> Check {
    let mut m = SymModule::new("f.c", 1);
    let types = [
        TypeNode::enumeration(4, 4, "color", vec![EnumItem::new("RED", 0), EnumItem::new("GREEN", 1), EnumItem::new("BLUE", 2)]),
        TypeNode::unsigned(4, 4),
        TypeNode::structure(4, 4, "b", vec![FieldRec { id: "f".into(), ty: Uid(2), offset: 0, bitsize: 3, lsb: 2 }]),
        TypeNode::int(4, 4),
        TypeNode::structure(
            8,
            4,
            "node",
            vec![
                FieldRec { id: "v".into(), ty: Uid(4), offset: 0, bitsize: 0, lsb: 0 },
                FieldRec { id: "next".into(), ty: Uid(6), offset: 4, bitsize: 0, lsb: 0 },
            ],
        ),
        TypeNode::pointer(Uid(5)),
        TypeNode::structure(
            12,
            4,
            "outer",
            vec![
                FieldRec { id: "head".into(), ty: Uid(5), offset: 0, bitsize: 0, lsb: 0 },
                FieldRec { id: "n".into(), ty: Uid(4), offset: 8, bitsize: 0, lsb: 0 },
            ],
        ),
    ];
    for (i, t) in types.into_iter().enumerate() {
        m.items.push(Item::ty(Uid(i as u32 + 1), t));
    }
    m.nuids = m.items.len() as u32;
    let f = |ty: u32, bytes: &[u8]| format_value(&m, Uid(ty), bytes).map_err(|e| e.to_string());
    let green = f(1, &1u32.to_le_bytes())?;
    ensure(green == "GREEN", || green.clone())?;
    for v in 0..=255u8 {
        let got = f(3, &[v, 0, 0, 0])?;
        ensure(got == format!("{{f = {}}}", (v >> 2) & 0b111), || format!("{v}: {got}"))?;
    }
    let mut bytes = Vec::new();
    bytes.extend(7i32.to_le_bytes());
    bytes.extend(0x2000u32.to_le_bytes());
    bytes.extend((-1i32).to_le_bytes());
    let nested = f(7, &bytes)?;
    ensure(nested == "{head = {v = 7, next = 0x2000}, n = -1}", || nested.clone())?;
    Ok(format!("GREEN, 256 bitfield values, {nested}"))
}

#[test]
fn acceptance() {
    let criteria: Vec<Criterion> = vec![
        ("stopping points in getword", 1_000, Box::new(stopping_points)),
        ("scope chain from c in getword", 1_000, Box::new(scope_chain)),
        ("pickle round trip and corruption", 30_000, Box::new(pickles)),
        ("breakpoints and dismissal (in-process)", 5_000, Box::new(|| breakpoints(Mode::InProcess))),
        ("breakpoints and dismissal (tcp)", 5_000, Box::new(|| breakpoints(Mode::Tcp))),
        ("breakpoint flag sizing", 5_000, Box::new(bpflags)),
        ("shadow stack (in-process)", 5_000, Box::new(|| shadow_stack(Mode::InProcess))),
        ("shadow stack (tcp)", 5_000, Box::new(|| shadow_stack(Mode::Tcp))),
        ("instrumentation transparency", 10_000, Box::new(transparency)),
        ("transport equivalence", 10_000, Box::new(transports)),
        ("value formatting", 5_000, Box::new(formatting)),
    ];
    let mut failed = 0;
    for (name, limit_ms, check) in criteria {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let limit = Duration::from_millis(limit_ms);
        match result {
            Ok(detail) if took <= limit => {
                println!("PASS {name} ({} ms, limit {limit_ms} ms): {detail}", took.as_millis())
            }
            Ok(_) => {
                failed += 1;
                println!("FAIL {name}: took {} ms, limit {limit_ms} ms", took.as_millis());
            }
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({} ms): {why}", took.as_millis());
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
