//! Code generation with debugger instrumentation.
//!
//! Instrumented code maintains a shadow frame at the base of every
//! activation (`up`, `down`, `func`, `module`, `ip`) linked from `_Nub_tos`,
//! records the current stopping point in `ip` before every call and at every
//! stopping point, and tests the point's breakpoint flag before evaluating
//! the code there.

pub mod isa;
pub mod object;
mod symfile;

use std::collections::HashMap;

use thiserror::Error;

use crate::minic::check::{
    ArithOp, Callee, CmpOp, CompoundOp, DataTarget, SymClass, SymId, TExpr, TExprKind, TFunction, TStmt, TStmtKind,
    TypedUnit,
};
use crate::minic::types::{CType, NumKind, TypeId, TypeTable};
use crate::minic::{Pos, StopPlan};
use crate::symtab;
use isa::{Access, BinKind, CmpKind, ConvOp, Insn};
use object::{Binding, ObjData, ObjFunction, ObjReloc, ObjSymbol, ObjectModule, SymDef};

pub use symfile::{emit_symfile, UidMap};

/// Byte offsets of the shadow-frame slots.
pub mod frame {
    pub const UP: u32 = 0;
    pub const DOWN: u32 = 4;
    pub const FUNC: u32 = 8;
    pub const MODULE: u32 = 12;
    pub const IP: u32 = 16;
    pub const SIZE: u32 = 20;
}

/// Linker-provided symbol holding the address of the top shadow frame.
pub const NUB_TOS: &str = "_Nub_tos";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompileOptions {
    pub instrument: bool,
}

impl Default for CompileOptions {
    fn default() -> Self {
        CompileOptions { instrument: true }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodegenError {
    #[error("internal error: no stopping point planned at {0}")]
    UnplannedStop(Pos),
    #[error("internal error: stopping point {0} was planned but never emitted")]
    UnusedStop(u32),
}

/// FNV-1a over the file name and a nonce.
pub fn uname_for(file: &str, nonce: &[u8]) -> u32 {
    let mut h: u32 = 0x811c_9dc5;
    for b in file.as_bytes().iter().chain([0u8].iter()).chain(nonce) {
        h ^= *b as u32;
        h = h.wrapping_mul(0x0100_0193);
    }
    h
}

/// Compile a checked unit to an object module carrying its symbol table.
pub fn compile_unit(
    unit: &TypedUnit,
    plan: &StopPlan,
    uname: u32,
    opts: CompileOptions,
) -> Result<ObjectModule, CodegenError> {
    let (symtab, uids) = emit_symfile(unit, plan, uname);
    let mut b = ObjBuilder { unit, symbols: Vec::new(), by_sym: HashMap::new(), strings: HashMap::new(), tos: None };
    let mut stops: HashMap<Pos, u32> = HashMap::new();
    for p in plan {
        stops.insert(p.src, p.index);
    }
    let mut used = vec![false; plan.len()];

    let mut functions = Vec::new();
    for f in &unit.funcs {
        let sym = b.sym(f.sym);
        let idx = functions.len() as u32;
        b.symbols[sym as usize].def = Some(SymDef::Function(idx));
        let func_uid = uids.syms[&f.sym].0;
        let mut g = FnGen { b: &mut b, code: Vec::new(), labels: Vec::new(), fixups: Vec::new(), loops: Vec::new(), stop_stack: Vec::new(), stops: &stops, used: &mut used, opts, uname, func: f };
        g.function(func_uid)?;
        let code = g.finish();
        functions.push(ObjFunction { symbol: sym, nparams: f.params.len() as u32, frame_size: f.frame_size, code });
    }
    if let Some(i) = used.iter().position(|u| !u) {
        return Err(CodegenError::UnusedStop(i as u32));
    }

    let mut data = Vec::new();
    for (id, g) in &unit.data {
        let sym = b.sym(*id);
        b.symbols[sym as usize].def = Some(SymDef::Data(data.len() as u32));
        let relocs = g
            .relocs
            .iter()
            .map(|r| {
                let symbol = match r.target {
                    DataTarget::Sym(s) => b.sym(s),
                    DataTarget::Str(i) => b.string(i),
                };
                ObjReloc { offset: r.offset, symbol, addend: r.addend }
            })
            .collect();
        data.push(ObjData { symbol: sym, bytes: g.bytes.clone(), align: g.align, relocs });
    }
    // string literals referenced anywhere get storage
    let mut strs: Vec<(u32, u32)> = b.strings.iter().map(|(i, s)| (*i, *s)).collect();
    strs.sort();
    for (i, sym) in strs {
        b.symbols[sym as usize].def = Some(SymDef::Data(data.len() as u32));
        data.push(ObjData { symbol: sym, bytes: unit.strings[i as usize].clone(), align: 1, relocs: Vec::new() });
    }

    let address_vector = uids.address_vector.iter().map(|id| b.sym(*id)).collect();
    Ok(ObjectModule {
        file: unit.file.clone(),
        uname,
        symbols: b.symbols,
        functions,
        data,
        address_vector,
        spoint_count: plan.len() as u32,
        symfile: symtab::to_bytes(&symtab),
    })
}

struct ObjBuilder<'a> {
    unit: &'a TypedUnit,
    symbols: Vec<ObjSymbol>,
    by_sym: HashMap<SymId, u32>,
    strings: HashMap<u32, u32>,
    tos: Option<u32>,
}

impl ObjBuilder<'_> {
    fn add(&mut self, name: String, binding: Binding) -> u32 {
        self.symbols.push(ObjSymbol { name, binding, def: None });
        self.symbols.len() as u32 - 1
    }

    fn sym(&mut self, id: SymId) -> u32 {
        if let Some(s) = self.by_sym.get(&id) {
            return *s;
        }
        let info = self.unit.sym(id);
        let (name, binding) = match info.class {
            SymClass::Function { external: true, .. } | SymClass::Object { external: true, .. } => {
                (info.name.clone(), Binding::Global)
            }
            SymClass::Object { local: true, .. } => (format!("{}.{}", info.name, id.0), Binding::Local),
            _ => (info.name.clone(), Binding::Local),
        };
        let s = self.add(name, binding);
        self.by_sym.insert(id, s);
        s
    }

    fn string(&mut self, i: u32) -> u32 {
        if let Some(s) = self.strings.get(&i) {
            return *s;
        }
        let s = self.add(format!(".str.{i}"), Binding::Local);
        self.strings.insert(i, s);
        s
    }

    fn tos(&mut self) -> u32 {
        if let Some(s) = self.tos {
            return s;
        }
        let s = self.add(NUB_TOS.into(), Binding::Global);
        self.tos = Some(s);
        s
    }
}

type Label = usize;

struct FnGen<'a, 'b> {
    b: &'a mut ObjBuilder<'b>,
    code: Vec<Insn<u32>>,
    labels: Vec<Option<u32>>,
    fixups: Vec<(usize, Label)>,
    /// (break, continue) targets of enclosing loops.
    loops: Vec<(Label, Label)>,
    /// Innermost stopping point being evaluated.
    stop_stack: Vec<u32>,
    stops: &'a HashMap<Pos, u32>,
    used: &'a mut Vec<bool>,
    opts: CompileOptions,
    uname: u32,
    func: &'a TFunction,
}

fn access(types: &TypeTable, ty: TypeId) -> Access {
    match types.get(types.unqual(ty)) {
        CType::Int { size: 1, signed: true } => Access::I8,
        CType::Int { size: 1, .. } => Access::U8,
        CType::Int { size: 2, signed: true } => Access::I16,
        CType::Int { size: 2, .. } => Access::U16,
        CType::Float { size: 8 } => Access::W64,
        _ => Access::W32,
    }
}

fn bin_kind(op: ArithOp) -> BinKind {
    match op {
        ArithOp::Add => BinKind::Add,
        ArithOp::Sub => BinKind::Sub,
        ArithOp::Mul => BinKind::Mul,
        ArithOp::Div => BinKind::Div,
        ArithOp::Rem => BinKind::Rem,
        ArithOp::Shl => BinKind::Shl,
        ArithOp::Shr => BinKind::Shr,
        ArithOp::And => BinKind::And,
        ArithOp::Or => BinKind::Or,
        ArithOp::Xor => BinKind::Xor,
    }
}

fn cmp_kind(op: CmpOp) -> CmpKind {
    match op {
        CmpOp::Eq => CmpKind::Eq,
        CmpOp::Ne => CmpKind::Ne,
        CmpOp::Lt => CmpKind::Lt,
        CmpOp::Gt => CmpKind::Gt,
        CmpOp::Le => CmpKind::Le,
        CmpOp::Ge => CmpKind::Ge,
    }
}

impl FnGen<'_, '_> {
    fn types(&self) -> &TypeTable {
        &self.b.unit.types
    }

    fn emit(&mut self, i: Insn<u32>) {
        self.code.push(i);
    }

    fn label(&mut self) -> Label {
        self.labels.push(None);
        self.labels.len() - 1
    }

    fn bind(&mut self, l: Label) {
        self.labels[l] = Some(self.code.len() as u32);
    }

    fn jump(&mut self, make: fn(u32) -> Insn<u32>, l: Label) {
        self.fixups.push((self.code.len(), l));
        self.emit(make(0));
    }

    fn finish(mut self) -> Vec<Insn<u32>> {
        for (at, l) in std::mem::take(&mut self.fixups) {
            let target = self.labels[l].expect("every label is bound");
            self.code[at] = match self.code[at] {
                Insn::Jump(_) => Insn::Jump(target),
                Insn::JumpIfZero(_) => Insn::JumpIfZero(target),
                Insn::JumpIfNonZero(_) => Insn::JumpIfNonZero(target),
                _ => unreachable!("fixup on a non-jump"),
            };
        }
        self.code
    }

    fn push_int(&mut self, v: i64) {
        self.emit(Insn::Push(v as u32 as u64));
    }

    fn function(&mut self, func_uid: u32) -> Result<(), CodegenError> {
        let f = self.func;
        for p in f.params.iter().rev() {
            let s = self.b.unit.sym(*p);
            let SymClass::Param { offset } = s.class else { unreachable!() };
            let acc = access(self.types(), s.ty);
            self.emit(Insn::StoreLocal(offset, acc));
        }
        if self.opts.instrument {
            let tos = self.b.tos();
            self.emit(Insn::PushAddr(tos, 0));
            self.emit(Insn::Load(Access::W32));
            self.emit(Insn::StoreLocal(frame::DOWN, Access::W32));
            self.push_int(func_uid as i64);
            self.emit(Insn::StoreLocal(frame::FUNC, Access::W32));
            self.push_int(self.uname as i64);
            self.emit(Insn::StoreLocal(frame::MODULE, Access::W32));
            self.emit(Insn::PushAddr(tos, 0));
            self.emit(Insn::AddrLocal(0));
            self.emit(Insn::Store(Access::W32));
            self.emit(Insn::Pop);
        }
        let entry = self.stop(f.lbrace)?;
        self.stop_stack.push(entry);
        for s in &f.body {
            self.stmt(s)?;
        }
        self.push_int(0);
        self.ret();
        Ok(())
    }

    fn ret(&mut self) {
        if self.opts.instrument {
            let tos = self.b.tos();
            self.emit(Insn::PushAddr(tos, 0));
            self.emit(Insn::AddrLocal(frame::DOWN));
            self.emit(Insn::Load(Access::W32));
            self.emit(Insn::Store(Access::W32));
            self.emit(Insn::Pop);
        }
        self.emit(Insn::Ret);
    }

    /// Emit the stopping point at `pos` and return its index.
    fn stop(&mut self, pos: Pos) -> Result<u32, CodegenError> {
        let n = *self.stops.get(&pos).ok_or(CodegenError::UnplannedStop(pos))?;
        self.used[n as usize] = true;
        if self.opts.instrument {
            self.push_int(n as i64);
            self.emit(Insn::StoreLocal(frame::IP, Access::W32));
            self.emit(Insn::LoadFlag(n));
            let skip = self.label();
            self.jump(Insn::JumpIfZero, skip);
            self.emit(Insn::Bp(n));
            self.bind(skip);
        }
        Ok(n)
    }

    /// Evaluate `e` as the expression of its own stopping point.
    fn point(&mut self, e: &TExpr) -> Result<(), CodegenError> {
        let n = self.stop(e.pos)?;
        self.stop_stack.push(n);
        let r = self.value(e);
        self.stop_stack.pop();
        r
    }

    fn stmt(&mut self, s: &TStmt) -> Result<(), CodegenError> {
        match &s.kind {
            TStmtKind::Expr(e) => {
                self.point(e)?;
                self.emit(Insn::Pop);
            }
            TStmtKind::Empty => {
                self.stop(s.pos)?;
            }
            TStmtKind::Block(items) => {
                for s in items {
                    self.stmt(s)?;
                }
            }
            TStmtKind::If(c, t, e) => {
                let (els, end) = (self.label(), self.label());
                self.point(c)?;
                self.jump(Insn::JumpIfZero, els);
                self.stmt(t)?;
                self.jump(Insn::Jump, end);
                self.bind(els);
                if let Some(e) = e {
                    self.stmt(e)?;
                }
                self.bind(end);
            }
            TStmtKind::While(c, body) => {
                let (top, end) = (self.label(), self.label());
                self.bind(top);
                self.point(c)?;
                self.jump(Insn::JumpIfZero, end);
                self.loops.push((end, top));
                self.stmt(body)?;
                self.loops.pop();
                self.jump(Insn::Jump, top);
                self.bind(end);
            }
            TStmtKind::For(init, c, step, body) => {
                let (top, cont, end) = (self.label(), self.label(), self.label());
                if let Some(init) = init {
                    self.point(init)?;
                    self.emit(Insn::Pop);
                }
                self.bind(top);
                if let Some(c) = c {
                    self.point(c)?;
                    self.jump(Insn::JumpIfZero, end);
                }
                self.loops.push((end, cont));
                self.stmt(body)?;
                self.loops.pop();
                self.bind(cont);
                if let Some(step) = step {
                    self.point(step)?;
                    self.emit(Insn::Pop);
                }
                self.jump(Insn::Jump, top);
                self.bind(end);
            }
            TStmtKind::Return(e) => {
                match e {
                    Some(e) => self.point(e)?,
                    None => self.push_int(0),
                }
                self.ret();
            }
            TStmtKind::Break => {
                let (brk, _) = *self.loops.last().expect("checked");
                self.jump(Insn::Jump, brk);
            }
            TStmtKind::Continue => {
                let (_, cont) = *self.loops.last().expect("checked");
                self.jump(Insn::Jump, cont);
            }
            TStmtKind::LocalInit { sym, zero, assigns } => {
                let n = self.stop(s.pos)?;
                self.stop_stack.push(n);
                if *zero {
                    let info = self.b.unit.sym(*sym);
                    let SymClass::Local { offset } = info.class else { unreachable!() };
                    let size = self.types().size(info.ty);
                    self.emit(Insn::AddrLocal(offset));
                    self.emit(Insn::Zero(size));
                }
                for a in assigns {
                    self.value(a)?;
                    self.emit(Insn::Pop);
                }
                self.stop_stack.pop();
            }
        }
        Ok(())
    }

    /// Push the address of an lvalue.
    fn addr(&mut self, e: &TExpr) -> Result<(), CodegenError> {
        match &e.kind {
            TExprKind::Var(id) => match self.b.unit.sym(*id).class {
                SymClass::Local { offset } | SymClass::Param { offset } => self.emit(Insn::AddrLocal(offset)),
                _ => {
                    let s = self.b.sym(*id);
                    self.emit(Insn::PushAddr(s, 0));
                }
            },
            TExprKind::Str(i) => {
                let s = self.b.string(*i);
                self.emit(Insn::PushAddr(s, 0));
            }
            TExprKind::Deref(p) => self.value(p)?,
            TExprKind::Member { base, offset, .. } => {
                self.addr(base)?;
                if *offset != 0 {
                    self.push_int(*offset as i64);
                    self.emit(Insn::Bin(BinKind::Add, NumKind::U32));
                }
            }
            _ => unreachable!("address of a non-lvalue"),
        }
        Ok(())
    }

    fn load(&mut self, lv: &TExpr) {
        match lv.kind {
            TExprKind::Member { bitsize: bits @ 1.., lsb, .. } => {
                let signed = self.types().is_signed(lv.ty);
                self.emit(Insn::LoadBits { lsb, bits, signed });
            }
            _ => {
                let a = access(self.types(), lv.ty);
                self.emit(Insn::Load(a));
            }
        }
    }

    fn store(&mut self, lv: &TExpr) {
        match lv.kind {
            TExprKind::Member { bitsize: bits @ 1.., lsb, .. } => {
                let signed = self.types().is_signed(lv.ty);
                self.emit(Insn::StoreBits { lsb, bits, signed });
            }
            _ => {
                let a = access(self.types(), lv.ty);
                self.emit(Insn::Store(a));
            }
        }
    }

    fn convert(&mut self, from: TypeId, to: TypeId) {
        let t = self.types();
        let (fk, tk) = (t.num_kind(from), t.num_kind(to));
        let to_u = t.unqual(to);
        let narrow = match t.get(to_u) {
            CType::Int { size: 1, signed: true } => Some(ConvOp::Sext8),
            CType::Int { size: 1, .. } => Some(ConvOp::Zext8),
            CType::Int { size: 2, signed: true } => Some(ConvOp::Sext16),
            CType::Int { size: 2, .. } => Some(ConvOp::Zext16),
            _ => None,
        };
        let signed_target = t.is_signed(to_u) || narrow.is_some();
        let op = match (fk, tk) {
            (NumKind::F32, NumKind::F64) => Some(ConvOp::F32ToF64),
            (NumKind::F64, NumKind::F32) => Some(ConvOp::F64ToF32),
            (NumKind::I32, NumKind::F32) => Some(ConvOp::I32ToF32),
            (NumKind::U32, NumKind::F32) => Some(ConvOp::U32ToF32),
            (NumKind::I32, NumKind::F64) => Some(ConvOp::I32ToF64),
            (NumKind::U32, NumKind::F64) => Some(ConvOp::U32ToF64),
            (NumKind::F32, _) if !tk.is_float() => Some(if signed_target { ConvOp::F32ToI32 } else { ConvOp::F32ToU32 }),
            (NumKind::F64, _) if !tk.is_float() => Some(if signed_target { ConvOp::F64ToI32 } else { ConvOp::F64ToU32 }),
            _ => None,
        };
        if let Some(op) = op {
            self.emit(Insn::Conv(op));
        }
        if let Some(n) = narrow {
            self.emit(Insn::Conv(n));
        }
    }

    /// Push the value of an expression. Aggregates yield their address.
    fn value(&mut self, e: &TExpr) -> Result<(), CodegenError> {
        match &e.kind {
            TExprKind::Int(v) => self.push_int(*v),
            TExprKind::Float(f) => {
                let bits = if self.types().size(e.ty) == 4 { (*f as f32).to_bits() as u64 } else { f.to_bits() };
                self.emit(Insn::Push(bits));
            }
            TExprKind::Var(_) | TExprKind::Deref(_) | TExprKind::Member { .. } | TExprKind::Str(_) => {
                self.addr(e)?;
                let t = self.types();
                if !(t.is_record(e.ty) || t.is_array(e.ty) || t.is_function(e.ty)) {
                    self.load(e);
                }
            }
            TExprKind::AddrOf(x) => self.addr(x)?,
            TExprKind::Convert(x) => {
                self.value(x)?;
                if self.types().is_void(e.ty) {
                    self.emit(Insn::Pop);
                    self.push_int(0);
                } else {
                    self.convert(x.ty, e.ty);
                }
            }
            TExprKind::Neg(x) => {
                self.value(x)?;
                let k = self.types().num_kind(e.ty);
                self.emit(Insn::Neg(k));
            }
            TExprKind::BitNot(x) => {
                self.value(x)?;
                self.emit(Insn::BitNot);
            }
            TExprKind::LNot(x) => {
                self.value(x)?;
                self.emit(Insn::LNot);
            }
            TExprKind::Arith(op, a, b) => {
                self.value(a)?;
                self.value(b)?;
                let k = self.types().num_kind(e.ty);
                self.emit(Insn::Bin(bin_kind(*op), k));
            }
            TExprKind::Compare(op, a, b) => {
                self.value(a)?;
                self.value(b)?;
                let k = self.types().num_kind(a.ty);
                self.emit(Insn::Cmp(cmp_kind(*op), k));
            }
            TExprKind::PtrAdd { ptr, idx, scale, sub } => {
                self.value(ptr)?;
                self.value(idx)?;
                if *scale != 1 {
                    self.push_int(*scale as i64);
                    self.emit(Insn::Bin(BinKind::Mul, NumKind::I32));
                }
                let op = if *sub { BinKind::Sub } else { BinKind::Add };
                self.emit(Insn::Bin(op, NumKind::U32));
            }
            TExprKind::PtrDiff { a, b, scale } => {
                self.value(a)?;
                self.value(b)?;
                self.emit(Insn::Bin(BinKind::Sub, NumKind::I32));
                if *scale != 1 {
                    self.push_int(*scale as i64);
                    self.emit(Insn::Bin(BinKind::Div, NumKind::I32));
                }
            }
            TExprKind::LogAnd(a, b) | TExprKind::LogOr(a, b) => {
                let is_and = matches!(e.kind, TExprKind::LogAnd(..));
                let (short, end) = (self.label(), self.label());
                let branch = if is_and { Insn::JumpIfZero } else { Insn::JumpIfNonZero };
                self.value(a)?;
                self.jump(branch, short);
                self.point(b)?;
                self.jump(branch, short);
                self.push_int(is_and as i64);
                self.jump(Insn::Jump, end);
                self.bind(short);
                self.push_int(!is_and as i64);
                self.bind(end);
            }
            TExprKind::Assign(lhs, rhs) => {
                self.addr(lhs)?;
                self.value(rhs)?;
                if self.types().is_record(lhs.ty) {
                    let size = self.types().size(lhs.ty);
                    self.emit(Insn::Copy(size));
                } else {
                    self.store(lhs);
                }
            }
            TExprKind::CompoundAssign { op, lhs, rhs } => {
                self.addr(lhs)?;
                self.emit(Insn::Dup);
                self.load(lhs);
                match op {
                    CompoundOp::Arith(aop, opty) => {
                        self.convert(lhs.ty, *opty);
                        self.value(rhs)?;
                        let k = self.types().num_kind(*opty);
                        self.emit(Insn::Bin(bin_kind(*aop), k));
                        self.convert(*opty, lhs.ty);
                    }
                    CompoundOp::PtrAdd { scale, sub } => {
                        self.value(rhs)?;
                        if *scale != 1 {
                            self.push_int(*scale as i64);
                            self.emit(Insn::Bin(BinKind::Mul, NumKind::I32));
                        }
                        let op = if *sub { BinKind::Sub } else { BinKind::Add };
                        self.emit(Insn::Bin(op, NumKind::U32));
                    }
                }
                self.store(lhs);
            }
            TExprKind::IncDec { lhs, pre, inc } => {
                self.addr(lhs)?;
                self.emit(Insn::Dup);
                self.load(lhs);
                if !pre {
                    // addr old -> old addr old
                    self.emit(Insn::Dup);
                    self.emit(Insn::Rot);
                    self.emit(Insn::Swap);
                }
                let t = self.types();
                let op = if *inc { BinKind::Add } else { BinKind::Sub };
                if let Some(elem) = t.pointee(lhs.ty) {
                    let scale = t.size(elem);
                    self.push_int(scale as i64);
                    self.emit(Insn::Bin(op, NumKind::U32));
                } else {
                    let opty = t.promote(lhs.ty);
                    let k = t.num_kind(opty);
                    let one = match k {
                        NumKind::F32 => 1f32.to_bits() as u64,
                        NumKind::F64 => 1f64.to_bits(),
                        _ => 1,
                    };
                    self.emit(Insn::Push(one));
                    self.emit(Insn::Bin(op, k));
                    self.convert(opty, lhs.ty);
                }
                self.store(lhs);
                if !pre {
                    self.emit(Insn::Pop);
                }
            }
            TExprKind::Call { callee, args } => {
                for a in args {
                    self.value(a)?;
                }
                match callee {
                    Callee::Builtin(b) => self.emit(Insn::Builtin(*b)),
                    Callee::Direct(id) => {
                        self.set_ip();
                        let s = self.b.sym(*id);
                        self.emit(Insn::Call(s));
                    }
                    Callee::Indirect(f) => {
                        self.value(f)?;
                        self.set_ip();
                        self.emit(Insn::CallIndirect);
                    }
                }
            }
        }
        Ok(())
    }

    fn set_ip(&mut self) {
        if self.opts.instrument {
            let n = *self.stop_stack.last().expect("calls occur inside stopping points");
            self.push_int(n as i64);
            self.emit(Insn::StoreLocal(frame::IP, Access::W32));
        }
    }
}
