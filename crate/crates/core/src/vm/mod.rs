//! Bytecode interpreter over a flat little-endian memory.

pub mod target;

use std::io::{Read, Write};
use std::sync::{Arc, Mutex};

use crate::codegen::frame;
use crate::codegen::isa::{Access, BinKind, Builtin, CmpKind, ConvOp, Insn, NumKind};
use crate::comm::FaultKind;
use crate::link::{function_index, ExecutableImage, DATA_BASE, STACK_TOP};

pub use target::TargetNub;

/// Lowest address the stack may grow down to; the heap stays below it.
pub const STACK_LIMIT: u32 = STACK_TOP / 2;

/// Why [`Machine::run`] returned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stop {
    Break { index: u32, uname: u32 },
    Fault { kind: FaultKind, addr: u32 },
    /// `balanced` reports the shadow-stack check after a return from the
    /// entry function, `None` after `exit`.
    Exit { code: i32, balanced: Option<bool> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ready,
    Stopped,
    Faulted,
    Exited,
}

struct Activation {
    func: u32,
    pc: usize,
    fp: u32,
    /// Operand-stack height below the arguments.
    base: usize,
    caller_sp: u32,
}

/// Output sink that can be inspected while a machine owns it.
#[derive(Debug, Clone, Default)]
pub struct SharedBuf(pub Arc<Mutex<Vec<u8>>>);

impl SharedBuf {
    pub fn contents(&self) -> Vec<u8> {
        self.0.lock().unwrap().clone()
    }

    /// Remove and return everything written so far.
    pub fn take(&self) -> Vec<u8> {
        std::mem::take(&mut *self.0.lock().unwrap())
    }
}

impl Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.lock().unwrap().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

pub struct Machine {
    image: Arc<ExecutableImage>,
    mem: Vec<u8>,
    flags: Vec<u8>,
    stack: Vec<u64>,
    frames: Vec<Activation>,
    sp: u32,
    brk: u32,
    sentinel: u32,
    status: Status,
    input: Box<dyn Read + Send>,
    output: Box<dyn Write + Send>,
}

type Exec<T> = Result<T, Stop>;

fn fault(kind: FaultKind, addr: u32) -> Stop {
    Stop::Fault { kind, addr }
}

impl Machine {
    pub fn new(
        image: Arc<ExecutableImage>,
        args: &[String],
        input: Box<dyn Read + Send>,
        output: Box<dyn Write + Send>,
    ) -> Self {
        let mut mem = vec![0u8; STACK_TOP as usize];
        let start = DATA_BASE as usize;
        mem[start..start + image.data.len()].copy_from_slice(&image.data);
        let flags = vec![0u8; image.bpflags_len as usize];
        let brk = image.heap_base;
        let mut m = Machine {
            image,
            mem,
            flags,
            stack: Vec::new(),
            frames: Vec::new(),
            sp: STACK_TOP,
            brk,
            sentinel: 0,
            status: Status::Ready,
            input,
            output,
        };
        m.start(args);
        m
    }

    /// Lay out argv at the top of the stack, build the sentinel frame and
    /// enter the entry function.
    fn start(&mut self, args: &[String]) {
        let mut ptrs = Vec::with_capacity(args.len());
        let mut sp = STACK_TOP;
        for a in args.iter().rev() {
            sp -= a.len() as u32 + 1;
            let at = sp as usize;
            self.mem[at..at + a.len()].copy_from_slice(a.as_bytes());
            self.mem[at + a.len()] = 0;
            ptrs.push(sp);
        }
        ptrs.reverse();
        sp = (sp - 4 * (ptrs.len() as u32 + 1)) & !7;
        let argv = sp;
        for (i, p) in ptrs.iter().enumerate() {
            self.put(argv + 4 * i as u32, *p);
        }
        self.put(argv + 4 * ptrs.len() as u32, 0);
        sp = (sp - frame::SIZE) & !7;
        self.sentinel = sp;
        self.mem[sp as usize..(sp + frame::SIZE) as usize].fill(0);
        let tos = self.image.nub_tos;
        self.put(tos, self.sentinel);
        self.sp = sp;

        let entry = self.image.entry;
        let nparams = self.image.functions[entry as usize].nparams;
        let argc = args.len() as u64;
        for v in [argc, argv as u64].into_iter().take(nparams as usize) {
            self.stack.push(v);
        }
        for _ in 2..nparams {
            self.stack.push(0);
        }
        self.stack.truncate(nparams as usize);
        self.enter(entry).expect("the entry frame fits on an empty stack");
    }

    pub fn image(&self) -> &ExecutableImage {
        &self.image
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn sentinel(&self) -> u32 {
        self.sentinel
    }

    pub fn flags(&self) -> &[u8] {
        &self.flags
    }

    pub fn flags_mut(&mut self) -> &mut [u8] {
        &mut self.flags
    }

    /// Mapped target memory from the data base to the stack top.
    pub fn memory(&self) -> &[u8] {
        &self.mem[DATA_BASE as usize..]
    }

    pub fn memory_mut(&mut self) -> &mut [u8] {
        &mut self.mem[DATA_BASE as usize..]
    }

    /// Read a 32-bit word, or `None` outside mapped memory.
    pub fn word(&self, addr: u32) -> Option<u32> {
        let at = addr as usize;
        (addr >= DATA_BASE && at + 4 <= self.mem.len())
            .then(|| u32::from_le_bytes(self.mem[at..at + 4].try_into().unwrap()))
    }

    fn put(&mut self, addr: u32, v: u32) {
        let at = addr as usize;
        self.mem[at..at + 4].copy_from_slice(&v.to_le_bytes());
    }

    fn range(&self, addr: u32, n: u32) -> Exec<usize> {
        let end = addr as u64 + n as u64;
        if addr < DATA_BASE || end > self.mem.len() as u64 {
            return Err(fault(FaultKind::Memory, addr));
        }
        Ok(addr as usize)
    }

    fn load(&self, addr: u32, a: Access) -> Exec<u64> {
        let at = self.range(addr, a.size())?;
        let m = &self.mem;
        Ok(match a {
            Access::I8 => m[at] as i8 as i32 as u32 as u64,
            Access::U8 => m[at] as u64,
            Access::I16 => i16::from_le_bytes([m[at], m[at + 1]]) as i32 as u32 as u64,
            Access::U16 => u16::from_le_bytes([m[at], m[at + 1]]) as u64,
            Access::W32 => u32::from_le_bytes(m[at..at + 4].try_into().unwrap()) as u64,
            Access::W64 => u64::from_le_bytes(m[at..at + 8].try_into().unwrap()),
        })
    }

    fn store(&mut self, addr: u32, a: Access, v: u64) -> Exec<()> {
        let at = self.range(addr, a.size())?;
        let n = a.size() as usize;
        self.mem[at..at + n].copy_from_slice(&v.to_le_bytes()[..n]);
        Ok(())
    }

    fn pop(&mut self) -> u64 {
        self.stack.pop().expect("operand stack underflow")
    }

    fn pop32(&mut self) -> u32 {
        self.pop() as u32
    }

    fn push32(&mut self, v: u32) {
        self.stack.push(v as u64);
    }

    fn enter(&mut self, func: u32) -> Exec<()> {
        let f = self.image.functions.get(func as usize).ok_or(fault(FaultKind::BadCall, func))?;
        let fp = self.sp.wrapping_sub(f.frame_size) & !7;
        if fp < STACK_LIMIT || fp > self.sp {
            return Err(fault(FaultKind::Memory, fp));
        }
        let base = self.stack.len() - f.nparams as usize;
        self.mem[fp as usize..(fp + f.frame_size) as usize].fill(0);
        self.frames.push(Activation { func, pc: 0, fp, base, caller_sp: self.sp });
        self.sp = fp;
        Ok(())
    }

    fn call(&mut self, addr: u32) -> Exec<()> {
        match function_index(addr) {
            Some(i) if (i as usize) < self.image.functions.len() => self.enter(i),
            _ => Err(fault(FaultKind::BadCall, addr)),
        }
    }

    /// Run until a breakpoint trap, a fault or exit.
    pub fn run(&mut self) -> Stop {
        match self.status {
            Status::Exited | Status::Faulted => panic!("run after the target stopped for good"),
            _ => {}
        }
        let stop = loop {
            if let Err(stop) = self.step() {
                break stop;
            }
        };
        self.status = match stop {
            Stop::Break { .. } => Status::Stopped,
            Stop::Fault { .. } => Status::Faulted,
            Stop::Exit { .. } => Status::Exited,
        };
        let _ = self.output.flush();
        stop
    }

    fn bin(&mut self, op: BinKind, k: NumKind) -> Exec<()> {
        let b = self.pop();
        let a = self.pop();
        let r = match k {
            NumKind::I32 | NumKind::U32 => {
                let (x, y) = (a as u32, b as u32);
                let signed = k == NumKind::I32;
                (match op {
                    BinKind::Add => x.wrapping_add(y),
                    BinKind::Sub => x.wrapping_sub(y),
                    BinKind::Mul => x.wrapping_mul(y),
                    BinKind::Div | BinKind::Rem if y == 0 => return Err(fault(FaultKind::DivideByZero, 0)),
                    BinKind::Div if signed => (x as i32).wrapping_div(y as i32) as u32,
                    BinKind::Div => x / y,
                    BinKind::Rem if signed => (x as i32).wrapping_rem(y as i32) as u32,
                    BinKind::Rem => x % y,
                    BinKind::Shl => x.wrapping_shl(y),
                    BinKind::Shr if signed => (x as i32).wrapping_shr(y) as u32,
                    BinKind::Shr => x.wrapping_shr(y),
                    BinKind::And => x & y,
                    BinKind::Or => x | y,
                    BinKind::Xor => x ^ y,
                }) as u64
            }
            NumKind::F32 => {
                let (x, y) = (f32::from_bits(a as u32), f32::from_bits(b as u32));
                let r = match op {
                    BinKind::Add => x + y,
                    BinKind::Sub => x - y,
                    BinKind::Mul => x * y,
                    BinKind::Div => x / y,
                    _ => unreachable!("integer operator on float"),
                };
                r.to_bits() as u64
            }
            NumKind::F64 => {
                let (x, y) = (f64::from_bits(a), f64::from_bits(b));
                let r = match op {
                    BinKind::Add => x + y,
                    BinKind::Sub => x - y,
                    BinKind::Mul => x * y,
                    BinKind::Div => x / y,
                    _ => unreachable!("integer operator on float"),
                };
                r.to_bits()
            }
        };
        self.stack.push(r);
        Ok(())
    }

    fn cmp(&mut self, op: CmpKind, k: NumKind) {
        let b = self.pop();
        let a = self.pop();
        let ord = match k {
            NumKind::I32 => (a as u32 as i32).partial_cmp(&(b as u32 as i32)),
            NumKind::U32 => (a as u32).partial_cmp(&(b as u32)),
            NumKind::F32 => f32::from_bits(a as u32).partial_cmp(&f32::from_bits(b as u32)),
            NumKind::F64 => f64::from_bits(a).partial_cmp(&f64::from_bits(b)),
        };
        use std::cmp::Ordering::*;
        let r = match (op, ord) {
            (CmpKind::Ne, None) => true,
            (_, None) => false,
            (CmpKind::Eq, Some(o)) => o == Equal,
            (CmpKind::Ne, Some(o)) => o != Equal,
            (CmpKind::Lt, Some(o)) => o == Less,
            (CmpKind::Gt, Some(o)) => o == Greater,
            (CmpKind::Le, Some(o)) => o != Greater,
            (CmpKind::Ge, Some(o)) => o != Less,
        };
        self.push32(r as u32);
    }

    fn conv(&mut self, op: ConvOp) {
        let v = self.pop();
        let w = v as u32;
        let f = f32::from_bits(w);
        let d = f64::from_bits(v);
        let r = match op {
            ConvOp::Sext8 => w as i8 as i32 as u32 as u64,
            ConvOp::Zext8 => w as u8 as u64,
            ConvOp::Sext16 => w as i16 as i32 as u32 as u64,
            ConvOp::Zext16 => w as u16 as u64,
            ConvOp::I32ToF32 => (w as i32 as f32).to_bits() as u64,
            ConvOp::U32ToF32 => (w as f32).to_bits() as u64,
            ConvOp::I32ToF64 => (w as i32 as f64).to_bits(),
            ConvOp::U32ToF64 => (w as f64).to_bits(),
            ConvOp::F32ToI32 => f as i32 as u32 as u64,
            ConvOp::F32ToU32 => f as u32 as u64,
            ConvOp::F64ToI32 => d as i32 as u32 as u64,
            ConvOp::F64ToU32 => d as u32 as u64,
            ConvOp::F32ToF64 => (f as f64).to_bits(),
            ConvOp::F64ToF32 => (d as f32).to_bits() as u64,
        };
        self.stack.push(r);
    }

    fn builtin(&mut self, b: Builtin) -> Exec<()> {
        match b {
            Builtin::Getchar => {
                let mut c = [0u8];
                let v = match self.input.read(&mut c) {
                    Ok(1) => c[0] as u32,
                    _ => u32::MAX,
                };
                self.push32(v);
            }
            Builtin::Putchar => {
                let c = self.pop32();
                let _ = self.output.write_all(&[c as u8]);
                self.push32(c as u8 as u32);
            }
            Builtin::PrintInt => {
                let v = self.pop32() as i32;
                let _ = write!(self.output, "{v}");
                self.push32(0);
            }
            Builtin::Malloc => {
                let n = self.pop32();
                let at = self.brk.div_ceil(8) * 8;
                match at.checked_add(n) {
                    Some(end) if end <= STACK_LIMIT => {
                        self.brk = end;
                        self.push32(at);
                    }
                    _ => self.push32(0),
                }
            }
            Builtin::Exit => {
                let code = self.pop32() as i32;
                return Err(Stop::Exit { code, balanced: None });
            }
        }
        Ok(())
    }

    fn step(&mut self) -> Exec<()> {
        let act = self.frames.last_mut().expect("running with no frame");
        let (func, pc, fp) = (act.func, act.pc, act.fp);
        act.pc += 1;
        let image = Arc::clone(&self.image);
        let insn = &image.functions[func as usize].code[pc];
        match *insn {
            Insn::Push(v) => self.stack.push(v),
            Insn::PushAddr(a, off) => self.push32(a.wrapping_add(off as u32)),
            Insn::AddrLocal(off) => self.push32(fp + off),
            Insn::Load(a) => {
                let addr = self.pop32();
                let v = self.load(addr, a)?;
                self.stack.push(v);
            }
            Insn::Store(a) => {
                let v = self.pop();
                let addr = self.pop32();
                self.store(addr, a, v)?;
                self.stack.push(v);
            }
            Insn::StoreLocal(off, a) => {
                let v = self.pop();
                self.store(fp + off, a, v)?;
            }
            Insn::LoadBits { lsb, bits, signed } => {
                let addr = self.pop32();
                let unit = self.load(addr, Access::W32)? as u32;
                self.push32(extract_bits(unit, lsb, bits, signed));
            }
            Insn::StoreBits { lsb, bits, signed } => {
                let v = self.pop32();
                let addr = self.pop32();
                let unit = self.load(addr, Access::W32)? as u32;
                let mask = field_mask(bits) << lsb;
                let unit = (unit & !mask) | ((v << lsb) & mask);
                self.store(addr, Access::W32, unit as u64)?;
                self.push32(extract_bits(unit, lsb, bits, signed));
            }
            Insn::Copy(n) => {
                let src = self.pop32();
                let dst = self.pop32();
                let (s, d) = (self.range(src, n)?, self.range(dst, n)?);
                self.mem.copy_within(s..s + n as usize, d);
                self.push32(dst);
            }
            Insn::Zero(n) => {
                let addr = self.pop32();
                let at = self.range(addr, n)?;
                self.mem[at..at + n as usize].fill(0);
            }
            Insn::Bin(op, k) => self.bin(op, k)?,
            Insn::Cmp(op, k) => self.cmp(op, k),
            Insn::Neg(k) => {
                let v = self.pop();
                self.stack.push(match k {
                    NumKind::F32 => (-f32::from_bits(v as u32)).to_bits() as u64,
                    NumKind::F64 => (-f64::from_bits(v)).to_bits(),
                    _ => (v as u32).wrapping_neg() as u64,
                });
            }
            Insn::BitNot => {
                let v = self.pop32();
                self.push32(!v);
            }
            Insn::LNot => {
                let v = self.pop32();
                self.push32((v == 0) as u32);
            }
            Insn::Conv(op) => self.conv(op),
            Insn::Dup => {
                let v = *self.stack.last().expect("operand stack underflow");
                self.stack.push(v);
            }
            Insn::Pop => {
                self.pop();
            }
            Insn::Swap => {
                let n = self.stack.len();
                self.stack.swap(n - 1, n - 2);
            }
            Insn::Rot => {
                let n = self.stack.len();
                self.stack[n - 3..].rotate_left(1);
            }
            Insn::Jump(t) => self.jump(t),
            Insn::JumpIfZero(t) => {
                if self.pop32() == 0 {
                    self.jump(t);
                }
            }
            Insn::JumpIfNonZero(t) => {
                if self.pop32() != 0 {
                    self.jump(t);
                }
            }
            Insn::Call(addr) => self.call(addr)?,
            Insn::CallIndirect => {
                let addr = self.pop32();
                self.call(addr)?;
            }
            Insn::Ret => {
                let v = self.pop();
                let act = self.frames.pop().expect("return with no frame");
                self.stack.truncate(act.base);
                self.sp = act.caller_sp;
                if self.frames.is_empty() {
                    let balanced = self.word(self.image.nub_tos) == Some(self.sentinel);
                    return Err(Stop::Exit { code: v as u32 as i32, balanced: Some(balanced) });
                }
                self.stack.push(v);
            }
            Insn::Builtin(b) => self.builtin(b)?,
            Insn::LoadFlag(n) => {
                let v = self.flags.get(n as usize).copied().unwrap_or(0);
                self.push32(v as u32);
            }
            Insn::Bp(index) => {
                let uname = image.functions[func as usize].uname;
                return Err(Stop::Break { index, uname });
            }
        }
        Ok(())
    }

    fn jump(&mut self, t: u32) {
        self.frames.last_mut().unwrap().pc = t as usize;
    }
}

fn field_mask(bits: u8) -> u32 {
    if bits >= 32 {
        u32::MAX
    } else {
        (1u32 << bits) - 1
    }
}

/// The `bits`-wide field at `lsb` in `unit`, sign-extended when `signed`.
pub fn extract_bits(unit: u32, lsb: u8, bits: u8, signed: bool) -> u32 {
    let v = (unit >> lsb) & field_mask(bits);
    if signed && bits < 32 && v >> (bits - 1) & 1 == 1 {
        v | !field_mask(bits)
    } else {
        v
    }
}

/// Compile, link and run sources to completion without a debugger.
pub fn run_image(image: Arc<ExecutableImage>, args: &[String], input: &[u8]) -> (Stop, Vec<u8>) {
    let out = SharedBuf::default();
    let mut m = Machine::new(image, args, Box::new(std::io::Cursor::new(input.to_vec())), Box::new(out.clone()));
    let stop = loop {
        match m.run() {
            Stop::Break { .. } => continue,
            s => break s,
        }
    };
    (stop, out.contents())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codegen::{compile_unit, uname_for, CompileOptions};
    use crate::link::link;
    use crate::minic::frontend;

    fn build(src: &str, instrument: bool) -> Arc<ExecutableImage> {
        let (u, p) = frontend(src, "t.c").unwrap_or_else(|e| panic!("{e:?}"));
        let o = compile_unit(&u, &p, uname_for("t.c", src.as_bytes()), CompileOptions { instrument }).unwrap();
        Arc::new(link(&[o], "main").unwrap().image)
    }

    fn run(src: &str, input: &str) -> (Stop, String) {
        let (stop, out) = run_image(build(src, true), &["prog".into()], input.as_bytes());
        (stop, String::from_utf8(out).unwrap())
    }

    #[test]
    fn exit_code_and_balance() {
        let (stop, _) = run("int main(void) { return 42; }", "");
        assert_eq!(stop, Stop::Exit { code: 42, balanced: Some(true) });
        let (stop, _) = run("int main(void) { exit(3); return 0; }", "");
        assert_eq!(stop, Stop::Exit { code: 3, balanced: None });
    }

    #[test]
    fn echo_input() {
        let src = "int main(void) { int c; while ((c = getchar()) != -1) putchar(c); return 0; }";
        assert_eq!(run(src, "hello\n").1, "hello\n");
    }

    #[test]
    fn arithmetic_and_conversions() {
        let src = r#"
            int main(void) {
                char c = 200; unsigned u = 7; double d = 2.5; float f = 1.5; short s = -3;
                print_int(c); putchar(' ');
                print_int(-7 / 2); putchar(' ');
                print_int(-7 % 2); putchar(' ');
                print_int(u >> 1); putchar(' ');
                print_int(d * 4); putchar(' ');
                print_int(f + d); putchar(' ');
                print_int(s * 2); putchar(' ');
                print_int((unsigned char)c); putchar('\n');
                return 0;
            }"#;
        assert_eq!(run(src, "").1, "-56 -3 -1 3 10 4 -6 200\n");
    }

    #[test]
    fn pointers_structs_and_bitfields() {
        let src = r#"
            struct node { int v; struct node *next; };
            struct flags { unsigned a : 2; int b : 3; unsigned c : 4; };
            int sum(struct node *n) { int s = 0; for (; n; n = n->next) s += n->v; return s; }
            int main(void) {
                struct node a, b; struct flags f; int arr[4]; int *p = arr; int i;
                a.v = 3; a.next = &b; b.v = 4; b.next = 0;
                f.a = 3; f.b = -2; f.c = 9;
                for (i = 0; i < 4; i++) arr[i] = i * i;
                print_int(sum(&a)); putchar(' ');
                print_int(f.a + f.b + f.c); putchar(' ');
                print_int(*(p + 3) + p[2]); putchar(' ');
                print_int(&arr[3] - p); putchar('\n');
                return 0;
            }"#;
        assert_eq!(run(src, "").1, "7 10 13 3\n");
    }

    #[test]
    fn post_increment_and_compound_ops() {
        let src = r#"
            int main(void) {
                char buf[4]; char *s = buf; int i = 5; int j;
                *s++ = 'a'; *s++ = 'b'; *s = 0;
                j = i++; j += i--; j <<= 1; i *= 3;
                print_int(s - buf); putchar(' ');
                print_int(j); putchar(' ');
                print_int(i); putchar(' ');
                putchar(buf[0]); putchar(buf[1]); putchar('\n');
                return 0;
            }"#;
        assert_eq!(run(src, "").1, "2 22 15 ab\n");
    }

    #[test]
    fn recursion_and_function_pointers() {
        let src = r#"
            int fact(int n) { if (n <= 1) return 1; return n * fact(n - 1); }
            int twice(int (*f)(int), int x) { return f(f(x)); }
            int main(void) { print_int(fact(5)); putchar(' '); print_int(twice(fact, 3)); putchar('\n'); return 0; }"#;
        assert_eq!(run(src, "").1, "120 720\n");
    }

    #[test]
    fn argv_reaches_main() {
        let src = "int main(int argc, char **argv) { putchar(argv[1][0]); return argc; }";
        let (stop, out) = run_image(build(src, true), &["p".into(), "xyz".into()], b"");
        assert_eq!(out, b"x");
        assert_eq!(stop, Stop::Exit { code: 2, balanced: Some(true) });
    }

    #[test]
    fn faults() {
        let (stop, _) = run("int main(void) { int z = 0; return 1 / z; }", "");
        assert!(matches!(stop, Stop::Fault { kind: FaultKind::DivideByZero, .. }));
        let (stop, _) = run("int main(void) { int *p = 0; return *p; }", "");
        assert!(matches!(stop, Stop::Fault { kind: FaultKind::Memory, addr: 0 }));
        let (stop, _) = run("int main(void) { int (*f)(void) = (int (*)(void))12; return f(); }", "");
        assert!(matches!(stop, Stop::Fault { kind: FaultKind::BadCall, addr: 12 }));
        let (stop, _) = run("int r(int n) { return r(n + 1); } int main(void) { return r(0); }", "");
        assert!(matches!(stop, Stop::Fault { kind: FaultKind::Memory, .. }));
    }

    #[test]
    fn armed_flag_traps() {
        let img = build("int main(void) { int i; for (i = 0; i < 3; i++) ; return 0; }", true);
        let mut m = Machine::new(img, &[], Box::new(std::io::empty()), Box::new(std::io::sink()));
        // points: 0 body, 1 i = 0, 2 i < 3, 3 i++, 4 empty body, 5 return
        m.flags_mut()[4] = 1;
        let mut hits = 0;
        while let Stop::Break { index, .. } = m.run() {
            assert_eq!(index, 4);
            hits += 1;
        }
        assert_eq!(hits, 3);
    }

    #[test]
    fn extract_bits_oracle() {
        for v in 0..=255u32 {
            assert_eq!(extract_bits(v, 2, 3, false), (v >> 2) & 7);
        }
        assert_eq!(extract_bits(0b1100, 2, 2, true), u32::MAX);
    }
}
