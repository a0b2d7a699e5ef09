//! Seeded generator of well-typed MiniC units.
//!
//! Programs are meant for compiling and linking; loops are bounded but no
//! attempt is made to keep run times small.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

const SCALARS: [&str; 6] = ["int", "unsigned", "char", "short", "double", "unsigned char"];

pub struct Unit {
    pub file: String,
    pub source: String,
}

struct Gen<'a> {
    rng: &'a mut ChaCha8Rng,
    prefix: String,
    out: String,
    /// File-scope int variables usable in expressions.
    globals: Vec<String>,
    /// Earlier functions: name and parameter count, all `int (int...)`.
    funcs: Vec<(String, usize)>,
    has_struct: bool,
    has_enum: bool,
    serial: u32,
}

impl Gen<'_> {
    fn name(&mut self, base: &str) -> String {
        self.serial += 1;
        format!("{}_{base}{}", self.prefix, self.serial)
    }

    fn expr(&mut self, vars: &[String], depth: u32) -> String {
        let leaf = depth == 0 || self.rng.gen_bool(0.4);
        if leaf {
            return match self.rng.gen_range(0..3) {
                0 if !vars.is_empty() => vars.choose(self.rng).unwrap().clone(),
                1 if !self.globals.is_empty() => self.globals.choose(self.rng).unwrap().clone(),
                _ => self.rng.gen_range(0..100).to_string(),
            };
        }
        match self.rng.gen_range(0..6) {
            0 => {
                let op = ["+", "-", "*", "&", "|", "^", "<", "==", "!="].choose(self.rng).unwrap();
                format!("({} {op} {})", self.expr(vars, depth - 1), self.expr(vars, depth - 1))
            }
            1 => {
                let op = ["&&", "||"].choose(self.rng).unwrap();
                format!("({} {op} {})", self.expr(vars, depth - 1), self.expr(vars, depth - 1))
            }
            2 if !self.funcs.is_empty() => {
                let (f, n) = self.funcs.choose(self.rng).unwrap().clone();
                let args: Vec<String> = (0..n).map(|_| self.expr(vars, depth - 1)).collect();
                format!("{f}({})", args.join(", "))
            }
            3 => format!("-({})", self.expr(vars, depth - 1)),
            4 => format!("!{}", self.expr(vars, depth - 1)),
            _ => format!("({} << {})", self.expr(vars, depth - 1), self.rng.gen_range(0..4)),
        }
    }

    fn stmt(&mut self, vars: &[String], indent: usize, depth: u32) -> String {
        let pad = " ".repeat(indent);
        let target = vars.choose(self.rng).unwrap().clone();
        match if depth == 0 { 0 } else { self.rng.gen_range(0..7) } {
            0 | 1 => format!("{pad}{target} = {};\n", self.expr(vars, 2)),
            2 => format!(
                "{pad}if ({})\n{}{pad}else\n{}",
                self.expr(vars, 2),
                self.stmt(vars, indent + 4, depth - 1),
                self.stmt(vars, indent + 4, depth - 1)
            ),
            3 => {
                let i = self.name("i");
                let body = self.stmt(vars, indent + 8, depth - 1);
                format!(
                    "{pad}{{\n{pad}    int {i};\n{pad}    for ({i} = 0; {i} < {}; {i}++)\n{body}{pad}}}\n",
                    self.rng.gen_range(1..5)
                )
            }
            4 => {
                let inner = self.name("b");
                let mut v = vars.to_vec();
                v.push(inner.clone());
                let body = self.stmt(&v, indent + 4, depth - 1);
                format!("{pad}{{\n{pad}    int {inner} = {};\n{body}{pad}}}\n", self.expr(vars, 1))
            }
            5 => format!("{pad};\n"),
            _ => format!("{pad}print_int({});\n", self.expr(vars, 2)),
        }
    }

    fn types(&mut self) {
        if self.rng.gen_bool(0.5) {
            self.has_struct = true;
            let p = self.prefix.clone();
            let _ = writeln!(
                self.out,
                "struct {p}_s {{ int a; char c; unsigned lo : {}; int hi : {}; struct {p}_s *next; double d; }};",
                self.rng.gen_range(1..9),
                self.rng.gen_range(2..12)
            );
            if self.rng.gen_bool(0.5) {
                let _ = writeln!(self.out, "union {p}_u {{ int i; char b[4]; float f; }};");
            }
        }
        if self.rng.gen_bool(0.5) {
            self.has_enum = true;
            let p = self.prefix.clone();
            let n = self.rng.gen_range(1..5);
            let items: Vec<String> = (0..n).map(|i| format!("{}_E{i}", p.to_uppercase())).collect();
            let _ = writeln!(self.out, "enum {p}_e {{ {} }};", items.join(", "));
            let _ = writeln!(self.out, "typedef enum {p}_e {p}_t;");
        }
    }

    fn globals(&mut self) {
        for _ in 0..self.rng.gen_range(0..4) {
            let g = self.name("g");
            let storage = if self.rng.gen_bool(0.3) { "static " } else { "" };
            let _ = writeln!(self.out, "{storage}int {g} = {};", self.rng.gen_range(0..50));
            self.globals.push(g);
        }
        if self.rng.gen_bool(0.5) {
            let a = self.name("arr");
            let ty = SCALARS.choose(self.rng).unwrap();
            let _ = writeln!(self.out, "{ty} {a}[{}];", self.rng.gen_range(1..8));
        }
        if self.has_struct && self.rng.gen_bool(0.7) {
            let p = self.prefix.clone();
            let v = self.name("sv");
            let _ = writeln!(self.out, "static struct {p}_s {v};");
        }
        if self.has_enum {
            let p = self.prefix.clone();
            let v = self.name("ev");
            let _ = writeln!(self.out, "{p}_t {v} = {}_E0;", p.to_uppercase());
        }
    }

    fn function(&mut self, name: &str, nparams: usize) {
        let params: Vec<String> = (0..nparams).map(|i| format!("p{i}")).collect();
        let decl: Vec<String> = params.iter().map(|p| format!("int {p}")).collect();
        let mut vars = vec!["t".to_string(), "k".to_string()];
        vars.extend(params.iter().cloned());
        let _ = writeln!(
            self.out,
            "int {name}({}) {{",
            if decl.is_empty() { "void".to_string() } else { decl.join(", ") }
        );
        let _ = writeln!(self.out, "    int t;\n    int k;");
        if self.rng.gen_bool(0.3) {
            let _ = writeln!(self.out, "    static int calls = 0;\n    calls++;");
        }
        if self.rng.gen_bool(0.3) {
            let ty = SCALARS.choose(self.rng).unwrap();
            let _ = writeln!(self.out, "    {ty} extra = 1;");
        }
        let _ = writeln!(self.out, "    t = 0;\n    k = 0;");
        for _ in 0..self.rng.gen_range(0..5) {
            let s = self.stmt(&vars, 4, 2);
            self.out.push_str(&s);
        }
        let ret = self.expr(&vars, 2);
        let _ = writeln!(self.out, "    return {ret};\n}}");
    }
}

/// A unit whose external names all start with `prefix`. When `with_main`
/// is set it defines `main`, calling `extern_calls` from other units.
pub fn unit(rng: &mut ChaCha8Rng, prefix: &str, with_main: bool, extern_calls: &[String]) -> Unit {
    let mut g = Gen {
        rng,
        prefix: prefix.to_string(),
        out: String::new(),
        globals: Vec::new(),
        funcs: Vec::new(),
        has_struct: false,
        has_enum: false,
        serial: 0,
    };
    for f in extern_calls {
        let _ = writeln!(g.out, "int {f}(int a);");
    }
    g.types();
    g.globals();
    for i in 0..g.rng.gen_range(1..5) {
        let name = format!("{prefix}_f{i}");
        let n = g.rng.gen_range(0..3);
        g.function(&name, n);
        g.funcs.push((name, n));
    }
    if with_main {
        g.out.push_str("int main(void) {\n");
        for f in extern_calls {
            let _ = writeln!(g.out, "    {f}(1);");
        }
        g.out.push_str("    return 0;\n}\n");
    }
    Unit { file: format!("{prefix}.c"), source: g.out }
}

/// `n` units; the first defines `main` and calls an entry in each other.
pub fn program(rng: &mut ChaCha8Rng, n: usize) -> Vec<Unit> {
    let entries: Vec<String> = (1..n).map(|i| format!("u{i}_entry")).collect();
    let mut units = vec![unit(rng, "u0", true, &entries)];
    for i in 1..n {
        let mut u = unit(rng, &format!("u{i}"), false, &[]);
        let _ = writeln!(u.source, "int u{i}_entry(int a) {{\n    return a + {i};\n}}");
        units.push(u);
    }
    units
}
