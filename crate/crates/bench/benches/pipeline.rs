use std::hint::black_box;
use std::sync::Arc;

use cdb_bench::{fixture, wf_sources, words};
use cdb_core::codegen::CompileOptions;
use cdb_core::comm::{decode, encode, Message};
use cdb_core::driver::{build, compile_source};
use cdb_core::link::link;
use cdb_core::symtab::{from_bytes, to_bytes};
use cdb_core::vm::run_image;
use criterion::{criterion_group, criterion_main, Criterion};

fn compile(c: &mut Criterion) {
    let srcs = wf_sources();
    c.bench_function("compile wf.c+lookup.c", |b| {
        b.iter(|| {
            for (f, s) in &srcs {
                black_box(compile_source(s, f, CompileOptions::default()).unwrap());
            }
        })
    });
    let objs: Vec<_> =
        srcs.iter().map(|(f, s)| compile_source(s, f, CompileOptions::default()).unwrap()).collect();
    c.bench_function("link wf.c+lookup.c", |b| b.iter(|| black_box(link(&objs, "main").unwrap())));
}

fn pickles(c: &mut Criterion) {
    let obj = compile_source(&fixture("wf.c"), "wf.c", CompileOptions::default()).unwrap();
    let m = from_bytes(&obj.symfile).unwrap();
    c.bench_function("pickle write wf.c", |b| b.iter(|| black_box(to_bytes(&m))));
    c.bench_function("pickle read wf.c", |b| b.iter(|| black_box(from_bytes(&obj.symfile).unwrap())));
}

fn instrumentation(c: &mut Criterion) {
    let srcs = wf_sources();
    let refs: Vec<(&str, &str)> = srcs.iter().map(|(f, s)| (*f, s.as_str())).collect();
    let input = words(2000);
    let mut g = c.benchmark_group("run wf on 2000 words");
    for instrument in [false, true] {
        let image = Arc::new(build(&refs, CompileOptions { instrument }).unwrap().image);
        let name = if instrument { "instrumented" } else { "plain" };
        g.bench_function(name, |b| b.iter(|| black_box(run_image(Arc::clone(&image), &[], &input))));
    }
    g.finish();
}

fn wire(c: &mut Criterion) {
    let msgs = [
        Message::Fetch { space: 0, addr: 0x1000, len: 40 },
        Message::FetchReply { bytes: vec![7; 40] },
        Message::BreakEvent { index: 17, uname: 0x4949_9895 },
        Message::Continue,
    ];
    c.bench_function("wire encode+decode", |b| {
        b.iter(|| {
            for m in &msgs {
                black_box(decode(&encode(m)).unwrap());
            }
        })
    });
}

criterion_group!(benches, compile, pickles, instrumentation, wire);
criterion_main!(benches);
