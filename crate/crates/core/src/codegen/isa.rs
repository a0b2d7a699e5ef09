//! Stack-machine instruction set.
//!
//! Every value on the operand stack is a `u64`: 32-bit integers and
//! pointers as their zero-extended bit pattern, `float` as its IEEE bits,
//! `double` as its IEEE bits. Jump targets are instruction indices within
//! the current function.

use serde::{Deserialize, Serialize};

pub use crate::minic::check::Builtin;
pub use crate::minic::types::NumKind;

/// Width and extension of a memory access.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Access {
    I8,
    U8,
    I16,
    U16,
    W32,
    W64,
}

impl Access {
    pub fn size(self) -> u32 {
        match self {
            Access::I8 | Access::U8 => 1,
            Access::I16 | Access::U16 => 2,
            Access::W32 => 4,
            Access::W64 => 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BinKind {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    And,
    Or,
    Xor,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CmpKind {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConvOp {
    Sext8,
    Zext8,
    Sext16,
    Zext16,
    I32ToF32,
    U32ToF32,
    I32ToF64,
    U32ToF64,
    F32ToI32,
    F32ToU32,
    F64ToI32,
    F64ToU32,
    F32ToF64,
    F64ToF32,
}

/// One instruction. `S` names a symbol: an object-file symbol index before
/// linking, an absolute address after.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Insn<S> {
    Push(u64),
    /// Address of a symbol plus a byte offset.
    PushAddr(S, i32),
    /// Frame base plus offset.
    AddrLocal(u32),
    /// Pop an address, push the loaded value.
    Load(Access),
    /// Pop a value and an address, store, push the value back.
    Store(Access),
    /// Pop a value and store it at frame base plus offset.
    StoreLocal(u32, Access),
    /// Pop an address, push the bit field held in the 32-bit unit there.
    LoadBits { lsb: u8, bits: u8, signed: bool },
    /// Pop a value and an address, update the bit field, push the field's
    /// new value.
    StoreBits { lsb: u8, bits: u8, signed: bool },
    /// Pop a source and a destination address, copy bytes, push the
    /// destination.
    Copy(u32),
    /// Pop an address and clear that many bytes.
    Zero(u32),
    Bin(BinKind, NumKind),
    /// Compare; pushes an `int` 0 or 1.
    Cmp(CmpKind, NumKind),
    Neg(NumKind),
    BitNot,
    LNot,
    Conv(ConvOp),
    Dup,
    Pop,
    Swap,
    /// `a b c` becomes `b c a`.
    Rot,
    Jump(u32),
    /// Pop; jump when the low 32 bits are zero.
    JumpIfZero(u32),
    JumpIfNonZero(u32),
    Call(S),
    /// Pop a function address and call it.
    CallIndirect,
    /// Pop the return value, discard the frame, push the value in the
    /// caller.
    Ret,
    Builtin(Builtin),
    /// Push the breakpoint flag for a stopping point.
    LoadFlag(u32),
    /// Breakpoint trap at a stopping point.
    Bp(u32),
}

impl<S> Insn<S> {
    /// Rewrite the symbol references.
    pub fn map_sym<T, E>(self, mut f: impl FnMut(S) -> Result<T, E>) -> Result<Insn<T>, E> {
        use Insn::*;
        Ok(match self {
            PushAddr(s, off) => PushAddr(f(s)?, off),
            Call(s) => Call(f(s)?),
            Push(v) => Push(v),
            AddrLocal(o) => AddrLocal(o),
            Load(a) => Load(a),
            Store(a) => Store(a),
            StoreLocal(o, a) => StoreLocal(o, a),
            LoadBits { lsb, bits, signed } => LoadBits { lsb, bits, signed },
            StoreBits { lsb, bits, signed } => StoreBits { lsb, bits, signed },
            Copy(n) => Copy(n),
            Zero(n) => Zero(n),
            Bin(k, n) => Bin(k, n),
            Cmp(k, n) => Cmp(k, n),
            Neg(n) => Neg(n),
            BitNot => BitNot,
            LNot => LNot,
            Conv(c) => Conv(c),
            Dup => Dup,
            Pop => Pop,
            Swap => Swap,
            Rot => Rot,
            Jump(t) => Jump(t),
            JumpIfZero(t) => JumpIfZero(t),
            JumpIfNonZero(t) => JumpIfNonZero(t),
            CallIndirect => CallIndirect,
            Ret => Ret,
            Builtin(b) => Builtin(b),
            LoadFlag(n) => LoadFlag(n),
            Bp(n) => Bp(n),
        })
    }
}
