//! Inputs shared by the benchmarks in `benches/`.

use std::path::Path;

/// A source file from the core test fixtures, by path relative to them.
pub fn fixture(name: &str) -> String {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// The word-frequency program: `wf.c` and `lookup.c`.
pub fn wf_sources() -> Vec<(&'static str, String)> {
    vec![("wf.c", fixture("wf.c")), ("lookup.c", fixture("lookup.c"))]
}

/// Deterministic text with many repeated words.
pub fn words(n: usize) -> Vec<u8> {
    const VOCAB: [&str; 8] = ["alpha", "beta", "gamma", "delta", "eps", "zeta", "eta", "theta"];
    let mut out = Vec::new();
    let mut x: u32 = 12345;
    for _ in 0..n {
        x = x.wrapping_mul(1_103_515_245).wrapping_add(12345);
        out.extend_from_slice(VOCAB[(x >> 16) as usize % VOCAB.len()].as_bytes());
        out.push(b' ');
    }
    out.push(b'\n');
    out
}
