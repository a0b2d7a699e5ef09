//! Type checking: resolves names and types, lays out frames and static data,
//! and lowers the syntax tree to a typed tree that code generation, the stop
//! planner and the symbol-table emitter all share.

use std::collections::HashMap;

use super::ast::*;
use super::types::{layout_record, CType, MemberSpec, TypeId, TypeTable};
use super::{Diagnostic, Pos};

/// First byte offset available to parameters and locals; the shadow frame
/// occupies the bytes below it.
pub const FRAME_HEADER: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymId(pub u32);

/// Where a symbol's scope chain continues.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Uplink {
    None,
    Sym(SymId),
    /// The last symbol of file scope, known only once the unit is complete.
    FileScope,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SymClass {
    Function { external: bool, defined: bool },
    /// File-scope object or local static.
    Object { external: bool, defined: bool, local: bool },
    Local { offset: u32 },
    Param { offset: u32 },
    Typedef,
    EnumConst(i64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SymInfo {
    pub name: String,
    pub pos: Pos,
    pub ty: TypeId,
    pub class: SymClass,
    pub uplink: Uplink,
    pub file_scope: bool,
    /// Order of declaration (or of first definition for functions and
    /// objects) within the unit.
    pub seq: u32,
}

impl SymInfo {
    /// Does this symbol appear in the unit's symbol table?
    pub fn in_symtab(&self) -> bool {
        match self.class {
            SymClass::Function { defined, .. } | SymClass::Object { defined, .. } => defined,
            _ => true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
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

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CompoundOp {
    /// Computed in the given operand type, then converted back.
    Arith(ArithOp, TypeId),
    PtrAdd { scale: u32, sub: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Builtin {
    Getchar,
    Putchar,
    PrintInt,
    Malloc,
    Exit,
}

impl Builtin {
    fn by_name(name: &str) -> Option<Builtin> {
        Some(match name {
            "getchar" => Builtin::Getchar,
            "putchar" => Builtin::Putchar,
            "print_int" => Builtin::PrintInt,
            "malloc" => Builtin::Malloc,
            "exit" => Builtin::Exit,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Callee {
    Direct(SymId),
    Indirect(Box<TExpr>),
    Builtin(Builtin),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TExpr {
    pub kind: TExprKind,
    pub ty: TypeId,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TExprKind {
    Int(i64),
    Float(f64),
    /// String literal by index into [`TypedUnit::strings`]; an array lvalue.
    Str(u32),
    Var(SymId),
    Deref(Box<TExpr>),
    AddrOf(Box<TExpr>),
    /// `offset` bytes into `base`; a bit field when `bitsize > 0`.
    Member { base: Box<TExpr>, offset: u32, bitsize: u8, lsb: u8 },
    /// Conversion from the operand's type to this node's type.
    Convert(Box<TExpr>),
    Neg(Box<TExpr>),
    BitNot(Box<TExpr>),
    LNot(Box<TExpr>),
    /// Operands already converted to the result type, except that a shift
    /// count is `int`.
    Arith(ArithOp, Box<TExpr>, Box<TExpr>),
    /// Operands converted to a common type; the result is `int`.
    Compare(CmpOp, Box<TExpr>, Box<TExpr>),
    PtrAdd { ptr: Box<TExpr>, idx: Box<TExpr>, scale: u32, sub: bool },
    PtrDiff { a: Box<TExpr>, b: Box<TExpr>, scale: u32 },
    LogAnd(Box<TExpr>, Box<TExpr>),
    LogOr(Box<TExpr>, Box<TExpr>),
    Assign(Box<TExpr>, Box<TExpr>),
    CompoundAssign { op: CompoundOp, lhs: Box<TExpr>, rhs: Box<TExpr> },
    IncDec { lhs: Box<TExpr>, pre: bool, inc: bool },
    Call { callee: Callee, args: Vec<TExpr> },
}

impl TExpr {
    fn new(kind: TExprKind, ty: TypeId, pos: Pos) -> Self {
        TExpr { kind, ty, pos }
    }

    pub fn is_lvalue(&self) -> bool {
        matches!(self.kind, TExprKind::Var(_) | TExprKind::Deref(_) | TExprKind::Member { .. } | TExprKind::Str(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TStmt {
    pub kind: TStmtKind,
    pub pos: Pos,
    /// Last symbol visible when the statement begins.
    pub tail: Uplink,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TStmtKind {
    Expr(TExpr),
    Empty,
    Block(Vec<TStmt>),
    If(TExpr, Box<TStmt>, Option<Box<TStmt>>),
    While(TExpr, Box<TStmt>),
    For(Option<TExpr>, Option<TExpr>, Option<TExpr>, Box<TStmt>),
    Return(Option<TExpr>),
    Break,
    Continue,
    /// Initialize an automatic variable: optionally zero its storage, then
    /// perform the assignments in order. `pos` of the statement is the
    /// initializer's first token.
    LocalInit { sym: SymId, zero: bool, assigns: Vec<TExpr> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TFunction {
    pub sym: SymId,
    pub params: Vec<SymId>,
    /// Every symbol declared inside the function in declaration order,
    /// parameters first. Extern declarations are not included.
    pub locals: Vec<SymId>,
    pub body: Vec<TStmt>,
    pub lbrace: Pos,
    pub rbrace: Pos,
    /// Last parameter, or file scope when there are none.
    pub entry_tail: Uplink,
    pub frame_size: u32,
    pub ret: TypeId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DataTarget {
    Sym(SymId),
    Str(u32),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataReloc {
    pub offset: u32,
    pub target: DataTarget,
    pub addend: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GlobalData {
    pub bytes: Vec<u8>,
    pub relocs: Vec<DataReloc>,
    pub align: u32,
}

#[derive(Debug, Clone)]
pub struct TypedUnit {
    pub file: String,
    pub types: TypeTable,
    pub syms: Vec<SymInfo>,
    pub funcs: Vec<TFunction>,
    /// Defined objects (file scope and local static) with their images.
    pub data: Vec<(SymId, GlobalData)>,
    /// NUL-terminated string literals.
    pub strings: Vec<Vec<u8>>,
}

impl TypedUnit {
    pub fn sym(&self, id: SymId) -> &SymInfo {
        &self.syms[id.0 as usize]
    }

    /// File-scope symbols of the symbol table in chain order, head first:
    /// typedefs and enumeration constants, then defined functions, then
    /// defined objects, each group in source order.
    pub fn file_scope_chain(&self) -> Vec<SymId> {
        let mut ids: Vec<(u8, u32, SymId)> = self
            .syms
            .iter()
            .enumerate()
            .filter(|(_, s)| s.file_scope && s.in_symtab())
            .map(|(i, s)| {
                let group = match s.class {
                    SymClass::Typedef | SymClass::EnumConst(_) => 0,
                    SymClass::Function { .. } => 1,
                    _ => 2,
                };
                (group, s.seq, SymId(i as u32))
            })
            .collect();
        ids.sort();
        ids.into_iter().map(|(_, _, id)| id).collect()
    }
}

type CResult<T> = Result<T, Diagnostic>;

fn err<T>(pos: Pos, msg: impl Into<String>) -> CResult<T> {
    Err(Diagnostic::new(pos, msg))
}

#[derive(Default)]
struct Scope {
    names: HashMap<String, SymId>,
    tags: HashMap<String, TypeId>,
}

struct FnCtx {
    ret: TypeId,
    tail: Uplink,
    frame: u32,
    locals: Vec<SymId>,
    loops: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum ConstVal {
    Int(i64),
    Float(f64),
    Addr(DataTarget, i64),
}

struct InitItem {
    offset: u32,
    ty: TypeId,
    bitsize: u8,
    lsb: u8,
    expr: TExpr,
}

struct Checker {
    file: String,
    types: TypeTable,
    syms: Vec<SymInfo>,
    scopes: Vec<Scope>,
    diags: Vec<Diagnostic>,
    strings: Vec<Vec<u8>>,
    funcs: Vec<TFunction>,
    data: HashMap<SymId, GlobalData>,
    seq: u32,
    fctx: Option<FnCtx>,
}

/// Check a parsed unit. All diagnostics found are returned together.
pub fn typecheck(tu: &TranslationUnit) -> Result<TypedUnit, Vec<Diagnostic>> {
    let mut c = Checker {
        file: tu.file.clone(),
        types: TypeTable::new(),
        syms: Vec::new(),
        scopes: vec![Scope::default()],
        diags: Vec::new(),
        strings: Vec::new(),
        funcs: Vec::new(),
        data: HashMap::new(),
        seq: 0,
        fctx: None,
    };
    for d in &tu.decls {
        let r = match d {
            ExternalDecl::Decl(decl) => c.file_decl(decl),
            ExternalDecl::Func(f) => c.function(f),
        };
        if let Err(e) = r {
            c.diags.push(e);
        }
    }
    if !c.diags.is_empty() {
        c.diags.sort_by_key(|d| d.pos);
        return Err(c.diags);
    }
    let mut data: Vec<_> = c.data.into_iter().collect();
    data.sort_by_key(|(id, _)| (c.syms[id.0 as usize].seq, *id));
    Ok(TypedUnit { file: c.file, types: c.types, syms: c.syms, funcs: c.funcs, data, strings: c.strings })
}

impl Checker {
    fn next_seq(&mut self) -> u32 {
        self.seq += 1;
        self.seq
    }

    fn sym(&self, id: SymId) -> &SymInfo {
        &self.syms[id.0 as usize]
    }

    fn lookup(&self, name: &str) -> Option<SymId> {
        self.scopes.iter().rev().find_map(|s| s.names.get(name).copied())
    }

    fn lookup_tag(&self, tag: &str) -> Option<TypeId> {
        self.scopes.iter().rev().find_map(|s| s.tags.get(tag).copied())
    }

    fn at_file_scope(&self) -> bool {
        self.scopes.len() == 1
    }

    /// Create a symbol in the current scope. Local symbols join the
    /// function's scope chain.
    fn new_sym(&mut self, name: &str, pos: Pos, ty: TypeId, class: SymClass) -> CResult<SymId> {
        if self.scopes.last().expect("scope").names.contains_key(name) {
            return err(pos, format!("redeclaration of '{name}'"));
        }
        let id = SymId(self.syms.len() as u32);
        let seq = self.next_seq();
        let file_scope = self.at_file_scope();
        let uplink = match &mut self.fctx {
            Some(f) if !file_scope => {
                let up = f.tail;
                f.tail = Uplink::Sym(id);
                f.locals.push(id);
                up
            }
            _ => Uplink::None,
        };
        self.syms.push(SymInfo { name: name.to_owned(), pos, ty, class, uplink, file_scope, seq });
        self.scopes.last_mut().expect("scope").names.insert(name.to_owned(), id);
        Ok(id)
    }

    fn alloc_local(&mut self, ty: TypeId) -> u32 {
        let (size, align) = (self.types.size(ty), self.types.align(ty));
        let f = self.fctx.as_mut().expect("in function");
        let off = f.frame.next_multiple_of(align.max(1));
        f.frame = off + size.max(1);
        off
    }

    fn tail(&self) -> Uplink {
        self.fctx.as_ref().map_or(Uplink::None, |f| f.tail)
    }

    // ---- declarations -------------------------------------------------

    fn resolve_specs(&mut self, specs: &DeclSpecs) -> CResult<TypeId> {
        let mut ty = match &specs.ty {
            TypeSpec::Void => TypeTable::VOID,
            TypeSpec::Char { unsigned: Some(true) } => TypeTable::UCHAR,
            TypeSpec::Char { .. } => TypeTable::CHAR,
            TypeSpec::Short { unsigned } => if *unsigned { TypeTable::USHORT } else { TypeTable::SHORT },
            TypeSpec::Int { unsigned } => if *unsigned { TypeTable::UINT } else { TypeTable::INT },
            TypeSpec::Float => TypeTable::FLOAT,
            TypeSpec::Double => TypeTable::DOUBLE,
            TypeSpec::Named(name) => match self.lookup(name) {
                Some(id) if self.sym(id).class == SymClass::Typedef => self.sym(id).ty,
                _ => return err(specs.pos, format!("'{name}' is not a type name")),
            },
            TypeSpec::Record(r) => self.record_spec(r)?,
            TypeSpec::Enum(e) => self.enum_spec(e)?,
        };
        if specs.quals.konst {
            ty = self.types.intern(CType::Const(ty));
        }
        if specs.quals.volatile {
            ty = self.types.intern(CType::Volatile(ty));
        }
        Ok(ty)
    }

    fn record_spec(&mut self, r: &RecordSpec) -> CResult<TypeId> {
        let kind_matches = |t: &TypeTable, id: TypeId| t.record(id).is_some_and(|d| d.is_union == r.is_union);
        let Some(members) = &r.members else {
            let tag = r.tag.as_ref().expect("parser guarantees a tag");
            if let Some(id) = self.lookup_tag(tag) {
                if !kind_matches(&self.types, id) {
                    return err(r.pos, format!("'{tag}' defined as a different kind of tag"));
                }
                return Ok(id);
            }
            let id = self.types.new_record(r.is_union, Some(tag.clone()));
            self.scopes.last_mut().expect("scope").tags.insert(tag.clone(), id);
            return Ok(id);
        };
        let id = match r.tag.as_ref().and_then(|t| self.scopes.last().expect("scope").tags.get(t).copied()) {
            Some(id) => {
                if !kind_matches(&self.types, id) {
                    return err(r.pos, "tag redeclared as a different kind");
                }
                if self.types.record(id).is_some_and(|d| d.complete) {
                    return err(r.pos, format!("redefinition of '{}'", r.tag.as_deref().unwrap_or("")));
                }
                id
            }
            None => {
                let id = self.types.new_record(r.is_union, r.tag.clone());
                if let Some(tag) = &r.tag {
                    self.scopes.last_mut().expect("scope").tags.insert(tag.clone(), id);
                }
                id
            }
        };
        let mut specs = Vec::new();
        let mut seen = std::collections::HashSet::new();
        for m in members {
            let base = self.resolve_specs(&m.specs)?;
            for (d, width) in &m.declarators {
                let ty = self.apply_derived(base, &d.derived)?;
                let name = d.name.as_ref().map_or(String::new(), |(n, _)| n.clone());
                if !name.is_empty() && !seen.insert(name.clone()) {
                    return err(d.pos, format!("duplicate member '{name}'"));
                }
                let bitsize = match width {
                    Some(w) => {
                        let w = self.const_int(w)?;
                        if !matches!(self.types.get(self.types.unqual(ty)), CType::Int { size: 4, .. }) {
                            return err(d.pos, "bit field must have type int or unsigned");
                        }
                        if !(0..=32).contains(&w) || (w == 0 && !name.is_empty()) {
                            return err(d.pos, format!("invalid bit-field width {w}"));
                        }
                        Some(w as u8)
                    }
                    None => {
                        if name.is_empty() {
                            return err(d.pos, "member needs a name");
                        }
                        if !self.types.is_complete(ty) {
                            return err(d.pos, format!("member '{name}' has incomplete type"));
                        }
                        None
                    }
                };
                specs.push(MemberSpec { name, ty, bitsize });
            }
        }
        layout_record(&mut self.types, id, specs);
        Ok(id)
    }

    fn enum_spec(&mut self, e: &EnumSpec) -> CResult<TypeId> {
        let Some(items) = &e.items else {
            let tag = e.tag.as_ref().expect("parser guarantees a tag");
            return match self.lookup_tag(tag) {
                Some(id) if matches!(self.types.get(id), CType::Enum(_)) => Ok(id),
                _ => err(e.pos, format!("unknown enum '{tag}'")),
            };
        };
        if let Some(tag) = &e.tag {
            if self.scopes.last().expect("scope").tags.contains_key(tag) {
                return err(e.pos, format!("redefinition of '{tag}'"));
            }
        }
        let id = self.types.new_enum(e.tag.clone());
        if let Some(tag) = &e.tag {
            self.scopes.last_mut().expect("scope").tags.insert(tag.clone(), id);
        }
        let CType::Enum(idx) = *self.types.get(id) else { unreachable!() };
        let mut next = 0i64;
        for it in items {
            let v = match &it.value {
                Some(x) => self.const_int(x)?,
                None => next,
            };
            if i32::try_from(v).is_err() {
                return err(it.pos, format!("enumerator value {v} out of range"));
            }
            self.new_sym(&it.name, it.pos, id, SymClass::EnumConst(v))?;
            self.types.enums[idx as usize].items.push((it.name.clone(), v));
            next = v + 1;
        }
        Ok(id)
    }

    fn apply_derived(&mut self, base: TypeId, derived: &[Derived]) -> CResult<TypeId> {
        let mut ty = base;
        for d in derived {
            ty = match d {
                Derived::Pointer(q) => {
                    let mut p = self.types.pointer(ty);
                    if q.konst {
                        p = self.types.intern(CType::Const(p));
                    }
                    if q.volatile {
                        p = self.types.intern(CType::Volatile(p));
                    }
                    p
                }
                Derived::Array(size) => {
                    if self.types.is_function(ty) || !self.types.is_complete(ty) {
                        let pos = size.as_ref().map_or(Pos::default(), |s| s.pos);
                        return err(pos, "array of incomplete or function type");
                    }
                    let n = match size {
                        Some(e) => {
                            let n = self.const_int(e)?;
                            if n <= 0 || n > u32::MAX as i64 / self.types.size(ty).max(1) as i64 {
                                return err(e.pos, format!("invalid array size {n}"));
                            }
                            n as u32
                        }
                        None => 0,
                    };
                    self.types.intern(CType::Array(ty, n))
                }
                Derived::Function(params) => {
                    if self.types.is_array(ty) || self.types.is_function(ty) {
                        return err(Pos::default(), "function cannot return an array or function");
                    }
                    if self.types.is_record(ty) {
                        return err(Pos::default(), "functions returning structures are not supported");
                    }
                    let mut ps = Vec::new();
                    for p in params {
                        ps.push(self.param_type(p)?);
                    }
                    self.types.intern(CType::Function { ret: ty, params: ps })
                }
            };
        }
        Ok(ty)
    }

    fn param_type(&mut self, p: &ParamDecl) -> CResult<TypeId> {
        let base = self.resolve_specs(&p.specs)?;
        let ty = self.apply_derived(base, &p.declarator.derived)?;
        let ty = self.adjust_param(ty);
        if self.types.is_void(ty) {
            return err(p.specs.pos, "parameter has void type");
        }
        if self.types.is_record(ty) {
            return err(p.specs.pos, "structure parameters are not supported");
        }
        Ok(ty)
    }

    fn adjust_param(&mut self, ty: TypeId) -> TypeId {
        let u = self.types.unqual(ty);
        match self.types.get(u).clone() {
            CType::Array(elem, _) => self.types.pointer(elem),
            CType::Function { .. } => self.types.pointer(u),
            _ => ty,
        }
    }

    /// Declare or merge a file-scope function or object.
    fn file_entity(&mut self, name: &str, pos: Pos, ty: TypeId, storage: Option<Storage>, defining: bool) -> CResult<SymId> {
        let is_fn = self.types.is_function(ty);
        let file_scope = &self.scopes[0];
        if let Some(&id) = file_scope.names.get(name) {
            let old = self.sym(id).clone();
            let same_kind = matches!(
                (&old.class, is_fn),
                (SymClass::Function { .. }, true) | (SymClass::Object { local: false, .. }, false)
            );
            if !same_kind {
                return err(pos, format!("'{name}' redeclared as a different kind of symbol"));
            }
            let merged_ty = match (self.types.get(self.types.unqual(old.ty)).clone(), self.types.get(self.types.unqual(ty)).clone()) {
                (CType::Array(a, 0), CType::Array(b, _)) if self.types.compatible(a, b) => ty,
                (CType::Array(a, _), CType::Array(b, 0)) if self.types.compatible(a, b) => old.ty,
                _ if self.types.compatible(old.ty, ty) => old.ty,
                _ => return err(pos, format!("conflicting types for '{name}'")),
            };
            let was_defined = matches!(old.class, SymClass::Function { defined: true, .. } | SymClass::Object { defined: true, .. });
            let seq = if defining && !was_defined { self.next_seq() } else { old.seq };
            let s = &mut self.syms[id.0 as usize];
            s.ty = merged_ty;
            s.seq = seq;
            if defining {
                s.pos = pos;
            }
            match &mut s.class {
                SymClass::Function { external, defined } | SymClass::Object { external, defined, .. } => {
                    if storage == Some(Storage::Static) {
                        *external = false;
                    }
                    *defined |= defining;
                }
                _ => unreachable!(),
            }
            return Ok(id);
        }
        let external = storage != Some(Storage::Static);
        let class = if is_fn {
            SymClass::Function { external, defined: defining }
        } else {
            SymClass::Object { external, defined: defining, local: false }
        };
        let id = SymId(self.syms.len() as u32);
        let seq = self.next_seq();
        self.syms.push(SymInfo { name: name.to_owned(), pos, ty, class, uplink: Uplink::None, file_scope: true, seq });
        self.scopes[0].names.insert(name.to_owned(), id);
        Ok(id)
    }

    fn file_decl(&mut self, decl: &Declaration) -> CResult<()> {
        let base = self.resolve_specs(&decl.specs)?;
        for d in &decl.declarators {
            let (name, npos) = d.declarator.name.clone().expect("parser requires a name");
            let mut ty = self.apply_derived(base, &d.declarator.derived)?;
            match decl.specs.storage {
                Some(Storage::Typedef) => {
                    if d.init.is_some() {
                        return err(npos, "typedef cannot be initialized");
                    }
                    self.new_sym(&name, npos, ty, SymClass::Typedef)?;
                }
                storage if self.types.is_function(ty) => {
                    if d.init.is_some() {
                        return err(npos, format!("function '{name}' cannot be initialized"));
                    }
                    self.file_entity(&name, npos, ty, storage, false)?;
                }
                storage => {
                    if self.types.is_void(ty) {
                        return err(npos, format!("variable '{name}' has void type"));
                    }
                    if storage == Some(Storage::Extern) && d.init.is_none() {
                        self.file_entity(&name, npos, ty, storage, false)?;
                        continue;
                    }
                    if let Some(init) = &d.init {
                        ty = self.complete_array(ty, init);
                    }
                    if !self.types.is_complete(ty) || self.types.size(ty) == 0 {
                        return err(npos, format!("variable '{name}' has incomplete type"));
                    }
                    let id = self.file_entity(&name, npos, ty, storage, true)?;
                    let data = self.static_image(ty, d.init.as_ref())?;
                    if d.init.is_some() && self.data.get(&id).is_some_and(|old| old.bytes.iter().any(|b| *b != 0) || !old.relocs.is_empty()) {
                        return err(npos, format!("redefinition of '{name}'"));
                    }
                    if d.init.is_some() || !self.data.contains_key(&id) {
                        self.data.insert(id, data);
                    }
                }
            }
        }
        Ok(())
    }

    /// Size an unsized array from its initializer.
    fn complete_array(&mut self, ty: TypeId, init: &Init) -> TypeId {
        let CType::Array(elem, 0) = *self.types.get(self.types.unqual(ty)) else { return ty };
        let n = match init {
            Init::List(items, _) => items.len() as u32,
            Init::Expr(Expr { kind: ExprKind::Str(s), .. }) if self.types.size(elem) == 1 => s.len() as u32 + 1,
            Init::Expr(_) => return ty,
        };
        if n == 0 {
            return ty;
        }
        self.types.intern(CType::Array(elem, n))
    }

    fn static_image(&mut self, ty: TypeId, init: Option<&Init>) -> CResult<GlobalData> {
        let size = self.types.size(ty) as usize;
        let mut g = GlobalData { bytes: vec![0; size], relocs: Vec::new(), align: self.types.align(ty) };
        let Some(init) = init else { return Ok(g) };
        let mut items = Vec::new();
        self.init_items(ty, init, 0, &mut items)?;
        for it in items {
            let Some(v) = self.const_eval(&it.expr) else {
                return err(it.expr.pos, "initializer is not a constant");
            };
            let off = it.offset as usize;
            let size = self.types.size(it.ty) as usize;
            match v {
                ConstVal::Int(v) if it.bitsize > 0 => {
                    let mask = if it.bitsize == 32 { u32::MAX } else { (1u32 << it.bitsize) - 1 };
                    let mut unit = u32::from_le_bytes(g.bytes[off..off + 4].try_into().expect("4 bytes"));
                    unit &= !(mask << it.lsb);
                    unit |= ((v as u32) & mask) << it.lsb;
                    g.bytes[off..off + 4].copy_from_slice(&unit.to_le_bytes());
                }
                ConstVal::Int(v) => g.bytes[off..off + size].copy_from_slice(&v.to_le_bytes()[..size]),
                ConstVal::Float(f) if size == 4 => g.bytes[off..off + 4].copy_from_slice(&(f as f32).to_le_bytes()),
                ConstVal::Float(f) => g.bytes[off..off + 8].copy_from_slice(&f.to_le_bytes()),
                ConstVal::Addr(target, addend) => {
                    if size != 4 {
                        return err(it.expr.pos, "address constant in a non-pointer object");
                    }
                    g.relocs.push(DataReloc { offset: it.offset, target, addend: addend as i32 });
                }
            }
        }
        Ok(g)
    }

    /// Flatten an initializer into scalar (or whole-record) assignments.
    fn init_items(&mut self, ty: TypeId, init: &Init, base: u32, out: &mut Vec<InitItem>) -> CResult<()> {
        let uty = self.types.unqual(ty);
        match self.types.get(uty).clone() {
            CType::Array(elem, n) => {
                let esz = self.types.size(elem);
                match init {
                    Init::Expr(Expr { kind: ExprKind::Str(s), pos }) if esz == 1 => {
                        if s.len() as u32 > n {
                            return err(*pos, "initializer string is too long");
                        }
                        for (i, b) in s.iter().enumerate() {
                            let v = self.types.wrap(elem, *b as i64);
                            let expr = TExpr::new(TExprKind::Int(v), self.types.unqual(elem), *pos);
                            out.push(InitItem { offset: base + i as u32, ty: elem, bitsize: 0, lsb: 0, expr });
                        }
                        Ok(())
                    }
                    Init::List(items, pos) => {
                        if items.len() as u32 > n {
                            return err(*pos, "too many initializers");
                        }
                        for (i, it) in items.iter().enumerate() {
                            self.init_items(elem, it, base + i as u32 * esz, out)?;
                        }
                        Ok(())
                    }
                    Init::Expr(e) => err(e.pos, "array initializer must be a list"),
                }
            }
            CType::Record(_) => {
                let rec = self.types.record(uty).expect("record").clone();
                match init {
                    Init::List(items, pos) => {
                        let limit = if rec.is_union { 1 } else { rec.fields.iter().filter(|f| !f.name.is_empty()).count() };
                        if items.len() > limit {
                            return err(*pos, "too many initializers");
                        }
                        let fields = rec.fields.iter().filter(|f| !f.name.is_empty());
                        for (f, it) in fields.zip(items) {
                            if f.bitsize > 0 {
                                let Init::Expr(e) = it else { return err(it.pos(), "bit field needs a scalar initializer") };
                                let v = self.value(e)?;
                                let expr = self.assign_convert(v, f.ty)?;
                                out.push(InitItem { offset: base + f.offset, ty: f.ty, bitsize: f.bitsize, lsb: f.lsb, expr });
                            } else {
                                self.init_items(f.ty, it, base + f.offset, out)?;
                            }
                        }
                        Ok(())
                    }
                    Init::Expr(e) => {
                        let v = self.expr(e)?;
                        let expr = self.assign_convert(v, ty)?;
                        out.push(InitItem { offset: base, ty, bitsize: 0, lsb: 0, expr });
                        Ok(())
                    }
                }
            }
            _ => match init {
                Init::Expr(e) => {
                    let v = self.value(e)?;
                    let expr = self.assign_convert(v, ty)?;
                    out.push(InitItem { offset: base, ty, bitsize: 0, lsb: 0, expr });
                    Ok(())
                }
                Init::List(items, pos) if items.len() == 1 => self.init_items(ty, &items[0], base, out),
                Init::List(_, pos) => err(*pos, "scalar initializer must be a single expression"),
            },
        }
    }

    fn function(&mut self, f: &FunctionDef) -> CResult<()> {
        let base = self.resolve_specs(&f.specs)?;
        let (name, npos) = f.declarator.name.clone().expect("parser requires a name");
        let derived = &f.declarator.derived;
        let Some((Derived::Function(params), outer)) = derived.split_last() else {
            return err(npos, "expected a function declarator");
        };
        let ret = self.apply_derived(base, outer)?;
        let fty = self.apply_derived(ret, &derived[derived.len() - 1..])?;
        if f.specs.storage == Some(Storage::Typedef) {
            return err(npos, "typedef with a function body");
        }
        if let Some(&id) = self.scopes[0].names.get(&name) {
            if matches!(self.sym(id).class, SymClass::Function { defined: true, .. }) {
                return err(npos, format!("redefinition of '{name}'"));
            }
        }
        let fsym = self.file_entity(&name, npos, fty, f.specs.storage, true)?;

        self.fctx = Some(FnCtx { ret, tail: Uplink::FileScope, frame: FRAME_HEADER, locals: Vec::new(), loops: 0 });
        self.scopes.push(Scope::default());
        let result = self.function_body(f, params, ret, fsym);
        self.scopes.pop();
        self.fctx = None;
        let func = result?;
        self.funcs.push(func);
        Ok(())
    }

    fn function_body(&mut self, f: &FunctionDef, params: &[ParamDecl], ret: TypeId, fsym: SymId) -> CResult<TFunction> {
        let mut param_ids = Vec::new();
        for p in params {
            let ty = self.param_type(p)?;
            let Some((pname, ppos)) = p.declarator.name.clone() else {
                return err(p.specs.pos, "parameter name omitted");
            };
            let off = self.alloc_local(ty);
            param_ids.push(self.new_sym(&pname, ppos, ty, SymClass::Param { offset: off })?);
        }
        let entry_tail = self.tail();
        let mut body = Vec::new();
        self.block_items(&f.body.items, &mut body);
        let fctx = self.fctx.as_ref().expect("in function");
        Ok(TFunction {
            sym: fsym,
            params: param_ids,
            locals: fctx.locals.clone(),
            body,
            lbrace: f.body.lbrace,
            rbrace: f.body.rbrace,
            entry_tail,
            frame_size: fctx.frame.next_multiple_of(8),
            ret,
        })
    }

    fn block_items(&mut self, items: &[Stmt], out: &mut Vec<TStmt>) {
        for s in items {
            if let Err(e) = self.stmt(s, out) {
                self.diags.push(e);
            }
        }
    }

    fn local_decl(&mut self, decl: &Declaration, out: &mut Vec<TStmt>) -> CResult<()> {
        let base = self.resolve_specs(&decl.specs)?;
        for d in &decl.declarators {
            let (name, npos) = d.declarator.name.clone().expect("parser requires a name");
            let mut ty = self.apply_derived(base, &d.declarator.derived)?;
            match decl.specs.storage {
                Some(Storage::Typedef) => {
                    self.new_sym(&name, npos, ty, SymClass::Typedef)?;
                }
                Some(Storage::Extern) | None if self.types.is_function(ty) || decl.specs.storage == Some(Storage::Extern) => {
                    if d.init.is_some() {
                        return err(npos, format!("'{name}' cannot be initialized here"));
                    }
                    let id = self.file_entity(&name, npos, ty, Some(Storage::Extern), false)?;
                    let scope = self.scopes.last_mut().expect("scope");
                    if scope.names.insert(name.clone(), id).is_some() {
                        return err(npos, format!("redeclaration of '{name}'"));
                    }
                }
                storage => {
                    if self.types.is_function(ty) {
                        return err(npos, "static function declarations must be at file scope");
                    }
                    if let Some(init) = &d.init {
                        ty = self.complete_array(ty, init);
                    }
                    if !self.types.is_complete(ty) || self.types.size(ty) == 0 {
                        return err(npos, format!("variable '{name}' has incomplete type"));
                    }
                    if storage == Some(Storage::Static) {
                        let class = SymClass::Object { external: false, defined: true, local: true };
                        let id = self.new_sym(&name, npos, ty, class)?;
                        let data = self.static_image(ty, d.init.as_ref())?;
                        self.data.insert(id, data);
                        continue;
                    }
                    let off = self.alloc_local(ty);
                    let id = self.new_sym(&name, npos, ty, SymClass::Local { offset: off })?;
                    let Some(init) = &d.init else { continue };
                    let mut items = Vec::new();
                    self.init_items(ty, init, 0, &mut items)?;
                    let whole_scalar = items.len() == 1 && items[0].offset == 0 && items[0].ty == ty && items[0].bitsize == 0;
                    let zero = !whole_scalar;
                    let var = TExpr::new(TExprKind::Var(id), ty, npos);
                    let assigns = items
                        .into_iter()
                        .map(|it| {
                            let pos = it.expr.pos;
                            let lhs = if whole_scalar {
                                var.clone()
                            } else {
                                TExpr::new(
                                    TExprKind::Member { base: Box::new(var.clone()), offset: it.offset, bitsize: it.bitsize, lsb: it.lsb },
                                    it.ty,
                                    pos,
                                )
                            };
                            let lty = self.types.unqual(lhs.ty);
                            TExpr::new(TExprKind::Assign(Box::new(lhs), Box::new(it.expr)), lty, pos)
                        })
                        .collect();
                    out.push(TStmt { kind: TStmtKind::LocalInit { sym: id, zero, assigns }, pos: init.pos(), tail: self.tail() });
                }
            }
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt, out: &mut Vec<TStmt>) -> CResult<()> {
        let tail = self.tail();
        let kind = match &s.kind {
            StmtKind::Decl(d) => return self.local_decl(d, out),
            StmtKind::Expr(e) => TStmtKind::Expr(self.value(e)?),
            StmtKind::Empty => TStmtKind::Empty,
            StmtKind::Block(b) => {
                self.scopes.push(Scope::default());
                let mut items = Vec::new();
                self.block_items(&b.items, &mut items);
                self.scopes.pop();
                self.fctx.as_mut().expect("in function").tail = tail;
                TStmtKind::Block(items)
            }
            StmtKind::If(c, t, e) => {
                let c = self.cond(c)?;
                let t = self.sub_stmt(t)?;
                let e = match e {
                    Some(e) => Some(Box::new(self.sub_stmt(e)?)),
                    None => None,
                };
                TStmtKind::If(c, Box::new(t), e)
            }
            StmtKind::While(c, body) => {
                let c = self.cond(c)?;
                TStmtKind::While(c, Box::new(self.loop_body(body)?))
            }
            StmtKind::For(init, c, step, body) => {
                let init = init.as_ref().map(|e| self.value(e)).transpose()?;
                let c = c.as_ref().map(|e| self.cond(e)).transpose()?;
                let step = step.as_ref().map(|e| self.value(e)).transpose()?;
                TStmtKind::For(init, c, step, Box::new(self.loop_body(body)?))
            }
            StmtKind::Return(e) => {
                let ret = self.fctx.as_ref().expect("in function").ret;
                match e {
                    Some(e) => {
                        if self.types.is_void(ret) {
                            return err(e.pos, "void function returns a value");
                        }
                        let v = self.value(e)?;
                        TStmtKind::Return(Some(self.assign_convert(v, ret)?))
                    }
                    None => TStmtKind::Return(None),
                }
            }
            StmtKind::Break | StmtKind::Continue => {
                if self.fctx.as_ref().expect("in function").loops == 0 {
                    return err(s.pos, "break or continue outside a loop");
                }
                if s.kind == StmtKind::Break { TStmtKind::Break } else { TStmtKind::Continue }
            }
        };
        out.push(TStmt { kind, pos: s.pos, tail });
        Ok(())
    }

    /// A statement in a nested position; declarations get their own scope.
    fn sub_stmt(&mut self, s: &Stmt) -> CResult<TStmt> {
        let tail = self.tail();
        self.scopes.push(Scope::default());
        let mut out = Vec::new();
        let r = self.stmt(s, &mut out);
        self.scopes.pop();
        self.fctx.as_mut().expect("in function").tail = tail;
        r?;
        Ok(match out.len() {
            1 => out.pop().expect("one statement"),
            _ => TStmt { kind: TStmtKind::Block(out), pos: s.pos, tail },
        })
    }

    fn loop_body(&mut self, s: &Stmt) -> CResult<TStmt> {
        self.fctx.as_mut().expect("in function").loops += 1;
        let r = self.sub_stmt(s);
        self.fctx.as_mut().expect("in function").loops -= 1;
        r
    }

    // ---- expressions ----------------------------------------------------

    fn cond(&mut self, e: &Expr) -> CResult<TExpr> {
        let v = self.value(e)?;
        self.truth_value(v)
    }

    /// A scalar used as a truth value; floats are compared against zero.
    fn truth_value(&mut self, e: TExpr) -> CResult<TExpr> {
        if !self.types.is_scalar(e.ty) {
            return err(e.pos, format!("scalar required, found {}", self.types.display(e.ty)));
        }
        if self.types.num_kind(e.ty).is_float() {
            let pos = e.pos;
            let ty = self.types.unqual(e.ty);
            let zero = TExpr::new(TExprKind::Float(0.0), ty, pos);
            return Ok(TExpr::new(TExprKind::Compare(CmpOp::Ne, Box::new(e), Box::new(zero)), TypeTable::INT, pos));
        }
        Ok(e)
    }

    fn conv(&mut self, e: TExpr, to: TypeId) -> TExpr {
        let to = self.types.unqual(to);
        if self.types.unqual(e.ty) == to {
            return e;
        }
        if let TExprKind::Int(v) = e.kind {
            if self.types.is_integer(to) || self.types.is_pointer(to) {
                return TExpr::new(TExprKind::Int(self.types.wrap(to, v)), to, e.pos);
            }
        }
        let pos = e.pos;
        TExpr::new(TExprKind::Convert(Box::new(e)), to, pos)
    }

    fn is_null_const(&self, e: &TExpr) -> bool {
        match &e.kind {
            TExprKind::Int(0) => self.types.is_integer(e.ty) || self.types.is_pointer(e.ty),
            TExprKind::Convert(inner) => self.types.is_pointer(e.ty) && self.is_null_const(inner),
            _ => false,
        }
    }

    fn assign_convert(&mut self, e: TExpr, to: TypeId) -> CResult<TExpr> {
        let t = &self.types;
        let ok = if t.is_arith(to) && t.is_arith(e.ty) {
            true
        } else if t.is_pointer(to) {
            if self.is_null_const(&e) {
                true
            } else if t.is_pointer(e.ty) {
                let (a, b) = (t.pointee(to).expect("pointer"), t.pointee(e.ty).expect("pointer"));
                t.is_void(a) || t.is_void(b) || t.compatible(a, b)
            } else {
                false
            }
        } else if t.is_record(to) {
            t.compatible(to, e.ty)
        } else {
            false
        };
        if !ok {
            return err(
                e.pos,
                format!("incompatible types: cannot convert {} to {}", self.types.display(e.ty), self.types.display(to)),
            );
        }
        if self.types.is_record(to) {
            return Ok(e);
        }
        Ok(self.conv(e, to))
    }

    /// Expression with array and function designators decayed to pointers.
    fn value(&mut self, e: &Expr) -> CResult<TExpr> {
        let t = self.expr(e)?;
        Ok(self.decay(t))
    }

    fn decay(&mut self, t: TExpr) -> TExpr {
        let u = self.types.unqual(t.ty);
        let pty = match self.types.get(u).clone() {
            CType::Array(elem, _) => self.types.pointer(elem),
            CType::Function { .. } => self.types.pointer(u),
            _ => return t,
        };
        let pos = t.pos;
        TExpr::new(TExprKind::AddrOf(Box::new(t)), pty, pos)
    }

    fn check_modifiable(&self, e: &TExpr) -> CResult<()> {
        if !e.is_lvalue() || matches!(e.kind, TExprKind::Str(_)) {
            return err(e.pos, "expression is not assignable");
        }
        if self.types.is_array(e.ty) || self.types.is_function(e.ty) {
            return err(e.pos, "array or function is not assignable");
        }
        if self.types.is_const(e.ty) {
            return err(e.pos, "assignment to read-only location");
        }
        Ok(())
    }

    fn int_const(&self, v: i64, pos: Pos) -> TExpr {
        TExpr::new(TExprKind::Int(v), TypeTable::INT, pos)
    }

    fn expr(&mut self, e: &Expr) -> CResult<TExpr> {
        let pos = e.pos;
        Ok(match &e.kind {
            ExprKind::Int { value, unsigned } => {
                if !unsigned && *value <= i32::MAX as u64 {
                    TExpr::new(TExprKind::Int(*value as i64), TypeTable::INT, pos)
                } else if *value <= u32::MAX as u64 {
                    TExpr::new(TExprKind::Int(*value as i64), TypeTable::UINT, pos)
                } else {
                    return err(pos, "integer constant is too large");
                }
            }
            ExprKind::Float { value, single } => {
                TExpr::new(TExprKind::Float(*value), if *single { TypeTable::FLOAT } else { TypeTable::DOUBLE }, pos)
            }
            ExprKind::Char(c) => self.int_const(*c, pos),
            ExprKind::Str(s) => {
                let mut bytes = s.clone();
                bytes.push(0);
                let ty = self.types.intern(CType::Array(TypeTable::CHAR, bytes.len() as u32));
                self.strings.push(bytes);
                TExpr::new(TExprKind::Str(self.strings.len() as u32 - 1), ty, pos)
            }
            ExprKind::Ident(name) => match self.lookup(name) {
                Some(id) => {
                    let s = self.sym(id);
                    match s.class {
                        SymClass::EnumConst(v) => self.int_const(v, pos),
                        SymClass::Typedef => return err(pos, format!("unexpected type name '{name}'")),
                        _ => TExpr::new(TExprKind::Var(id), s.ty, pos),
                    }
                }
                None if Builtin::by_name(name).is_some() => return err(pos, format!("builtin '{name}' must be called")),
                None => return err(pos, format!("undeclared identifier '{name}'")),
            },
            ExprKind::Unary(op, x) => self.unary(*op, x, pos)?,
            ExprKind::Binary(op, a, b) => self.binary(*op, a, b, pos)?,
            ExprKind::Assign(op, l, r) => self.assign(*op, l, r, pos)?,
            ExprKind::Call(f, args) => self.call(f, args, pos)?,
            ExprKind::Index(a, i) => {
                let (a, i) = (self.value(a)?, self.value(i)?);
                let (p, i) = if self.types.is_pointer(a.ty) { (a, i) } else { (i, a) };
                if !self.types.is_pointer(p.ty) || !self.types.is_integer(i.ty) {
                    return err(pos, "subscript requires a pointer and an integer");
                }
                let sum = self.ptr_add(p, i, false, pos)?;
                let elem = self.types.pointee(sum.ty).expect("pointer");
                TExpr::new(TExprKind::Deref(Box::new(sum)), elem, pos)
            }
            ExprKind::Member(base, name, arrow) => {
                let base = if *arrow {
                    let p = self.value(base)?;
                    let Some(rec) = self.types.pointee(p.ty).filter(|t| self.types.is_record(*t)) else {
                        return err(pos, "'->' requires a pointer to a structure");
                    };
                    TExpr::new(TExprKind::Deref(Box::new(p)), rec, pos)
                } else {
                    let b = self.expr(base)?;
                    if !self.types.is_record(b.ty) {
                        return err(pos, "'.' requires a structure");
                    }
                    b
                };
                let Some(rec) = self.types.record(base.ty) else { unreachable!() };
                if !rec.complete {
                    return err(pos, "use of incomplete structure");
                }
                let Some(f) = rec.fields.iter().find(|f| f.name == *name).cloned() else {
                    return err(pos, format!("no member named '{name}'"));
                };
                let mut ty = f.ty;
                if self.types.is_const(base.ty) && !self.types.is_const(ty) {
                    ty = self.types.intern(CType::Const(ty));
                }
                TExpr::new(TExprKind::Member { base: Box::new(base), offset: f.offset, bitsize: f.bitsize, lsb: f.lsb }, ty, pos)
            }
            ExprKind::Cast(tn, x) => {
                let ty = self.type_name(tn)?;
                let v = self.value(x)?;
                let t = &self.types;
                if t.is_void(ty) {
                    return Ok(TExpr::new(TExprKind::Convert(Box::new(v)), TypeTable::VOID, pos));
                }
                let ok = (t.is_arith(ty) && t.is_arith(v.ty))
                    || (t.is_pointer(ty) && (t.is_pointer(v.ty) || t.is_integer(v.ty)))
                    || (t.is_integer(ty) && t.is_pointer(v.ty));
                if !ok {
                    return err(pos, format!("invalid cast from {} to {}", t.display(v.ty), t.display(ty)));
                }
                let mut c = self.conv(v, ty);
                c.pos = pos;
                c
            }
            ExprKind::SizeofType(tn) => {
                let ty = self.type_name(tn)?;
                self.sizeof(ty, pos)?
            }
            ExprKind::SizeofExpr(x) => {
                let v = self.expr(x)?;
                if matches!(v.kind, TExprKind::Member { bitsize: 1.., .. }) {
                    return err(pos, "sizeof applied to a bit field");
                }
                self.sizeof(v.ty, pos)?
            }
        })
    }

    fn sizeof(&self, ty: TypeId, pos: Pos) -> CResult<TExpr> {
        if !self.types.is_complete(ty) {
            return err(pos, "sizeof applied to an incomplete type");
        }
        Ok(TExpr::new(TExprKind::Int(self.types.size(ty) as i64), TypeTable::UINT, pos))
    }

    fn type_name(&mut self, tn: &TypeName) -> CResult<TypeId> {
        let base = self.resolve_specs(&tn.specs)?;
        self.apply_derived(base, &tn.declarator.derived)
    }

    fn ptr_add(&mut self, p: TExpr, i: TExpr, sub: bool, pos: Pos) -> CResult<TExpr> {
        let elem = self.types.pointee(p.ty).expect("pointer");
        if !self.types.is_complete(elem) {
            return err(pos, "arithmetic on a pointer to an incomplete type");
        }
        let scale = self.types.size(elem);
        let ty = self.types.unqual(p.ty);
        let i = self.conv(i, TypeTable::INT);
        Ok(TExpr::new(TExprKind::PtrAdd { ptr: Box::new(p), idx: Box::new(i), scale, sub }, ty, pos))
    }

    fn unary(&mut self, op: UnOp, x: &Expr, pos: Pos) -> CResult<TExpr> {
        Ok(match op {
            UnOp::Neg | UnOp::Plus | UnOp::BitNot => {
                let v = self.value(x)?;
                let ok = if op == UnOp::BitNot { self.types.is_integer(v.ty) } else { self.types.is_arith(v.ty) };
                if !ok {
                    return err(pos, format!("invalid operand type {}", self.types.display(v.ty)));
                }
                let ty = self.types.promote(v.ty);
                let v = self.conv(v, ty);
                match op {
                    UnOp::Neg => TExpr::new(TExprKind::Neg(Box::new(v)), ty, pos),
                    UnOp::BitNot => TExpr::new(TExprKind::BitNot(Box::new(v)), ty, pos),
                    _ => TExpr { pos, ..v },
                }
            }
            UnOp::LNot => {
                let v = self.cond(x)?;
                TExpr::new(TExprKind::LNot(Box::new(v)), TypeTable::INT, pos)
            }
            UnOp::Deref => {
                let v = self.value(x)?;
                let Some(t) = self.types.pointee(v.ty) else {
                    return err(pos, "dereference of a non-pointer");
                };
                if self.types.is_void(t) {
                    return err(pos, "dereference of a void pointer");
                }
                TExpr::new(TExprKind::Deref(Box::new(v)), t, pos)
            }
            UnOp::Addr => {
                let v = self.expr(x)?;
                if matches!(v.kind, TExprKind::Member { bitsize: 1.., .. }) {
                    return err(pos, "cannot take the address of a bit field");
                }
                if !v.is_lvalue() {
                    return err(pos, "cannot take the address of an rvalue");
                }
                let ty = self.types.pointer(v.ty);
                TExpr::new(TExprKind::AddrOf(Box::new(v)), ty, pos)
            }
            UnOp::PreInc | UnOp::PreDec | UnOp::PostInc | UnOp::PostDec => {
                let v = self.expr(x)?;
                self.check_modifiable(&v)?;
                if !self.types.is_scalar(v.ty) {
                    return err(pos, "increment of a non-scalar");
                }
                if let Some(t) = self.types.pointee(v.ty) {
                    if !self.types.is_complete(t) {
                        return err(pos, "arithmetic on a pointer to an incomplete type");
                    }
                }
                let pre = matches!(op, UnOp::PreInc | UnOp::PreDec);
                let inc = matches!(op, UnOp::PreInc | UnOp::PostInc);
                let ty = self.types.unqual(v.ty);
                TExpr::new(TExprKind::IncDec { lhs: Box::new(v), pre, inc }, ty, pos)
            }
        })
    }

    fn binary(&mut self, op: BinOp, a: &Expr, b: &Expr, pos: Pos) -> CResult<TExpr> {
        if matches!(op, BinOp::LogAnd | BinOp::LogOr) {
            let (a, b) = (self.cond(a)?, self.cond(b)?);
            let kind = if op == BinOp::LogAnd {
                TExprKind::LogAnd(Box::new(a), Box::new(b))
            } else {
                TExprKind::LogOr(Box::new(a), Box::new(b))
            };
            return Ok(TExpr::new(kind, TypeTable::INT, pos));
        }
        let (a, b) = (self.value(a)?, self.value(b)?);
        let t = &self.types;
        let (ap, bp) = (t.is_pointer(a.ty), t.is_pointer(b.ty));
        match op {
            BinOp::Add if ap && t.is_integer(b.ty) => return self.ptr_add(a, b, false, pos),
            BinOp::Add if bp && t.is_integer(a.ty) => return self.ptr_add(b, a, false, pos),
            BinOp::Sub if ap && t.is_integer(b.ty) => return self.ptr_add(a, b, true, pos),
            BinOp::Sub if ap && bp => {
                let (x, y) = (t.pointee(a.ty).expect("ptr"), t.pointee(b.ty).expect("ptr"));
                if !t.compatible(x, y) || !t.is_complete(x) {
                    return err(pos, "subtraction of incompatible pointers");
                }
                let scale = t.size(x);
                return Ok(TExpr::new(TExprKind::PtrDiff { a: Box::new(a), b: Box::new(b), scale }, TypeTable::INT, pos));
            }
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Gt | BinOp::Le | BinOp::Ge => {
                let cmp = match op {
                    BinOp::Eq => CmpOp::Eq,
                    BinOp::Ne => CmpOp::Ne,
                    BinOp::Lt => CmpOp::Lt,
                    BinOp::Gt => CmpOp::Gt,
                    BinOp::Le => CmpOp::Le,
                    _ => CmpOp::Ge,
                };
                let (a, b) = if t.is_arith(a.ty) && t.is_arith(b.ty) {
                    let ty = t.common(a.ty, b.ty);
                    (self.conv(a, ty), self.conv(b, ty))
                } else if ap && bp {
                    let (x, y) = (t.pointee(a.ty).expect("ptr"), t.pointee(b.ty).expect("ptr"));
                    if !(t.compatible(x, y) || t.is_void(x) || t.is_void(y)) {
                        return err(pos, "comparison of incompatible pointers");
                    }
                    (a, b)
                } else if ap && self.is_null_const(&b) {
                    let ty = a.ty;
                    (a, self.conv(b, ty))
                } else if bp && self.is_null_const(&a) {
                    let ty = b.ty;
                    (self.conv(a, ty), b)
                } else {
                    return err(pos, "invalid operands to comparison");
                };
                return Ok(TExpr::new(TExprKind::Compare(cmp, Box::new(a), Box::new(b)), TypeTable::INT, pos));
            }
            _ => {}
        }
        let aop = arith_op(op);
        let integer_only = !matches!(aop, ArithOp::Add | ArithOp::Sub | ArithOp::Mul | ArithOp::Div);
        let ok = if integer_only { t.is_integer(a.ty) && t.is_integer(b.ty) } else { t.is_arith(a.ty) && t.is_arith(b.ty) };
        if !ok {
            return err(pos, format!("invalid operands {} and {}", t.display(a.ty), t.display(b.ty)));
        }
        let (ty, a, b) = if matches!(aop, ArithOp::Shl | ArithOp::Shr) {
            let ty = t.promote(a.ty);
            (ty, self.conv(a, ty), self.conv(b, TypeTable::INT))
        } else {
            let ty = t.common(a.ty, b.ty);
            (ty, self.conv(a, ty), self.conv(b, ty))
        };
        Ok(TExpr::new(TExprKind::Arith(aop, Box::new(a), Box::new(b)), ty, pos))
    }

    fn assign(&mut self, op: Option<BinOp>, l: &Expr, r: &Expr, pos: Pos) -> CResult<TExpr> {
        let lhs = self.expr(l)?;
        self.check_modifiable(&lhs)?;
        let rhs = self.value(r)?;
        let lty = self.types.unqual(lhs.ty);
        let Some(op) = op else {
            let rhs = self.assign_convert(rhs, lhs.ty)?;
            return Ok(TExpr::new(TExprKind::Assign(Box::new(lhs), Box::new(rhs)), lty, pos));
        };
        let t = &self.types;
        if t.is_pointer(lhs.ty) && matches!(op, BinOp::Add | BinOp::Sub) {
            if !t.is_integer(rhs.ty) {
                return err(pos, "pointer compound assignment needs an integer");
            }
            let elem = t.pointee(lhs.ty).expect("ptr");
            if !t.is_complete(elem) {
                return err(pos, "arithmetic on a pointer to an incomplete type");
            }
            let scale = t.size(elem);
            let rhs = self.conv(rhs, TypeTable::INT);
            let cop = CompoundOp::PtrAdd { scale, sub: op == BinOp::Sub };
            return Ok(TExpr::new(TExprKind::CompoundAssign { op: cop, lhs: Box::new(lhs), rhs: Box::new(rhs) }, lty, pos));
        }
        let aop = arith_op(op);
        let integer_only = !matches!(aop, ArithOp::Add | ArithOp::Sub | ArithOp::Mul | ArithOp::Div);
        let ok = if integer_only { t.is_integer(lhs.ty) && t.is_integer(rhs.ty) } else { t.is_arith(lhs.ty) && t.is_arith(rhs.ty) };
        if !ok {
            return err(pos, "invalid operands to compound assignment");
        }
        let (opty, rhs) = if matches!(aop, ArithOp::Shl | ArithOp::Shr) {
            (t.promote(lhs.ty), self.conv(rhs, TypeTable::INT))
        } else {
            let ty = t.common(lhs.ty, rhs.ty);
            (ty, self.conv(rhs, ty))
        };
        let cop = CompoundOp::Arith(aop, opty);
        Ok(TExpr::new(TExprKind::CompoundAssign { op: cop, lhs: Box::new(lhs), rhs: Box::new(rhs) }, lty, pos))
    }

    fn call(&mut self, f: &Expr, args: &[Expr], pos: Pos) -> CResult<TExpr> {
        if let ExprKind::Ident(name) = &f.kind {
            if self.lookup(name).is_none() {
                if let Some(b) = Builtin::by_name(name) {
                    return self.builtin_call(b, name, args, pos);
                }
            }
        }
        let fv = self.expr(f)?;
        let direct = match fv.kind {
            TExprKind::Var(id) if self.types.is_function(fv.ty) => Some(id),
            _ => None,
        };
        let fv = self.decay(fv);
        let Some(CType::Function { ret, params }) = self.types.pointee(fv.ty).map(|t| self.types.get(self.types.unqual(t)).clone()) else {
            return err(pos, "called object is not a function");
        };
        if params.len() != args.len() {
            return err(pos, format!("expected {} arguments, got {}", params.len(), args.len()));
        }
        let mut targs = Vec::new();
        for (a, p) in args.iter().zip(&params) {
            let v = self.value(a)?;
            targs.push(self.assign_convert(v, *p)?);
        }
        let callee = match direct {
            Some(id) => Callee::Direct(id),
            None => Callee::Indirect(Box::new(fv)),
        };
        Ok(TExpr::new(TExprKind::Call { callee, args: targs }, self.types.unqual(ret), pos))
    }

    fn builtin_call(&mut self, b: Builtin, name: &str, args: &[Expr], pos: Pos) -> CResult<TExpr> {
        let void_ptr = self.types.pointer(TypeTable::VOID);
        let (params, ret): (&[TypeId], TypeId) = match b {
            Builtin::Getchar => (&[], TypeTable::INT),
            Builtin::Putchar => (&[TypeTable::INT], TypeTable::INT),
            Builtin::PrintInt => (&[TypeTable::INT], TypeTable::VOID),
            Builtin::Malloc => (&[TypeTable::UINT], void_ptr),
            Builtin::Exit => (&[TypeTable::INT], TypeTable::VOID),
        };
        if params.len() != args.len() {
            return err(pos, format!("'{name}' expects {} arguments, got {}", params.len(), args.len()));
        }
        let mut targs = Vec::new();
        for (a, p) in args.iter().zip(params) {
            let v = self.value(a)?;
            if !self.types.is_arith(v.ty) {
                return err(v.pos, format!("'{name}' expects an arithmetic argument"));
            }
            targs.push(self.conv(v, *p));
        }
        Ok(TExpr::new(TExprKind::Call { callee: Callee::Builtin(b), args: targs }, ret, pos))
    }

    // ---- constants ------------------------------------------------------

    fn const_int(&mut self, e: &Expr) -> CResult<i64> {
        let v = self.value(e)?;
        if !self.types.is_integer(v.ty) {
            return err(e.pos, "integer constant expression required");
        }
        match self.const_eval(&v) {
            Some(ConstVal::Int(n)) => Ok(n),
            _ => err(e.pos, "integer constant expression required"),
        }
    }

    fn const_eval(&self, e: &TExpr) -> Option<ConstVal> {
        let t = &self.types;
        let int = |e: &TExpr| match self.const_eval(e) {
            Some(ConstVal::Int(v)) => Some(v),
            _ => None,
        };
        Some(match &e.kind {
            TExprKind::Int(v) => ConstVal::Int(*v),
            TExprKind::Float(f) => ConstVal::Float(if t.size(e.ty) == 4 { *f as f32 as f64 } else { *f }),
            TExprKind::Convert(x) => {
                let v = self.const_eval(x)?;
                if t.is_void(e.ty) {
                    return None;
                }
                match v {
                    ConstVal::Int(n) if t.num_kind(e.ty).is_float() => {
                        let f = if t.is_signed(x.ty) { n as f64 } else { n as u64 as f64 };
                        ConstVal::Float(if t.size(e.ty) == 4 { f as f32 as f64 } else { f })
                    }
                    ConstVal::Int(n) => ConstVal::Int(t.wrap(e.ty, n)),
                    ConstVal::Float(f) if t.num_kind(e.ty).is_float() => {
                        ConstVal::Float(if t.size(e.ty) == 4 { f as f32 as f64 } else { f })
                    }
                    ConstVal::Float(f) if t.is_integer(e.ty) => ConstVal::Int(t.wrap(e.ty, f as i64)),
                    ConstVal::Addr(..) if t.is_pointer(e.ty) || t.size(e.ty) == 4 => v,
                    _ => return None,
                }
            }
            TExprKind::Neg(x) => match self.const_eval(x)? {
                ConstVal::Int(n) => ConstVal::Int(t.wrap(e.ty, n.wrapping_neg())),
                ConstVal::Float(f) => ConstVal::Float(-f),
                _ => return None,
            },
            TExprKind::BitNot(x) => ConstVal::Int(t.wrap(e.ty, !int(x)?)),
            TExprKind::LNot(x) => ConstVal::Int((int(x)? == 0) as i64),
            TExprKind::LogAnd(a, b) => ConstVal::Int((int(a)? != 0 && int(b)? != 0) as i64),
            TExprKind::LogOr(a, b) => ConstVal::Int((int(a)? != 0 || int(b)? != 0) as i64),
            TExprKind::Arith(op, a, b) => match (self.const_eval(a)?, self.const_eval(b)?) {
                (ConstVal::Int(x), ConstVal::Int(y)) => {
                    let unsigned = !t.is_signed(e.ty);
                    let (ux, uy) = (x as u32 as u64, y as u32 as u64);
                    let v = match op {
                        ArithOp::Add => x.wrapping_add(y),
                        ArithOp::Sub => x.wrapping_sub(y),
                        ArithOp::Mul => x.wrapping_mul(y),
                        ArithOp::Div | ArithOp::Rem if y == 0 => return None,
                        ArithOp::Div if unsigned => (ux / uy) as i64,
                        ArithOp::Rem if unsigned => (ux % uy) as i64,
                        ArithOp::Div => (x as i32).wrapping_div(y as i32) as i64,
                        ArithOp::Rem => (x as i32).wrapping_rem(y as i32) as i64,
                        ArithOp::Shl => ((x as u32) << (y as u32 & 31)) as i64,
                        ArithOp::Shr if unsigned => (ux >> (y as u32 & 31)) as i64,
                        ArithOp::Shr => ((x as i32) >> (y as u32 & 31)) as i64,
                        ArithOp::And => x & y,
                        ArithOp::Or => x | y,
                        ArithOp::Xor => x ^ y,
                    };
                    ConstVal::Int(t.wrap(e.ty, v))
                }
                (ConstVal::Float(x), ConstVal::Float(y)) => ConstVal::Float(match op {
                    ArithOp::Add => x + y,
                    ArithOp::Sub => x - y,
                    ArithOp::Mul => x * y,
                    ArithOp::Div => x / y,
                    _ => return None,
                }),
                _ => return None,
            },
            TExprKind::Compare(op, a, b) => {
                let ord = match (self.const_eval(a)?, self.const_eval(b)?) {
                    (ConstVal::Int(x), ConstVal::Int(y)) if t.is_signed(a.ty) => (x as i32).partial_cmp(&(y as i32)),
                    (ConstVal::Int(x), ConstVal::Int(y)) => (x as u32).partial_cmp(&(y as u32)),
                    (ConstVal::Float(x), ConstVal::Float(y)) => x.partial_cmp(&y),
                    _ => return None,
                };
                use std::cmp::Ordering::*;
                let r = match op {
                    CmpOp::Eq => ord == Some(Equal),
                    CmpOp::Ne => ord != Some(Equal),
                    CmpOp::Lt => ord == Some(Less),
                    CmpOp::Gt => ord == Some(Greater),
                    CmpOp::Le => matches!(ord, Some(Less | Equal)),
                    CmpOp::Ge => matches!(ord, Some(Greater | Equal)),
                };
                ConstVal::Int(r as i64)
            }
            TExprKind::AddrOf(x) => self.const_addr(x)?,
            TExprKind::PtrAdd { ptr, idx, scale, sub } => match self.const_eval(ptr)? {
                ConstVal::Addr(target, off) => {
                    let d = int(idx)? * *scale as i64;
                    ConstVal::Addr(target, if *sub { off - d } else { off + d })
                }
                ConstVal::Int(n) => {
                    let d = int(idx)? * *scale as i64;
                    ConstVal::Int(t.wrap(e.ty, if *sub { n - d } else { n + d }))
                }
                _ => return None,
            },
            _ => return None,
        })
    }

    fn const_addr(&self, lv: &TExpr) -> Option<ConstVal> {
        match &lv.kind {
            TExprKind::Var(id) => match self.sym(*id).class {
                SymClass::Function { .. } | SymClass::Object { .. } => Some(ConstVal::Addr(DataTarget::Sym(*id), 0)),
                _ => None,
            },
            TExprKind::Str(i) => Some(ConstVal::Addr(DataTarget::Str(*i), 0)),
            TExprKind::Member { base, offset, bitsize: 0, .. } => match self.const_addr(base)? {
                ConstVal::Addr(t, off) => Some(ConstVal::Addr(t, off + *offset as i64)),
                _ => None,
            },
            TExprKind::Deref(p) => self.const_eval(p),
            _ => None,
        }
    }
}

fn arith_op(op: BinOp) -> ArithOp {
    match op {
        BinOp::Add => ArithOp::Add,
        BinOp::Sub => ArithOp::Sub,
        BinOp::Mul => ArithOp::Mul,
        BinOp::Div => ArithOp::Div,
        BinOp::Rem => ArithOp::Rem,
        BinOp::Shl => ArithOp::Shl,
        BinOp::Shr => ArithOp::Shr,
        BinOp::BitAnd => ArithOp::And,
        BinOp::BitOr => ArithOp::Or,
        BinOp::BitXor => ArithOp::Xor,
        _ => unreachable!("not an arithmetic operator"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::parse;

    fn check(src: &str) -> TypedUnit {
        let ast = parse(src, "t.c").unwrap_or_else(|e| panic!("{e:?}"));
        typecheck(&ast).unwrap_or_else(|e| panic!("{e:?}"))
    }

    fn errors(src: &str) -> Vec<Diagnostic> {
        typecheck(&parse(src, "t.c").unwrap()).unwrap_err()
    }

    fn names(u: &TypedUnit, ids: &[SymId]) -> Vec<String> {
        ids.iter().map(|id| u.sym(*id).name.clone()).collect()
    }

    const WF: &str = "struct node { int count; struct node *left, *right; char *word; };\n\
        static int isletter(int c) { return c >= 'a' && c <= 'z'; }\n\
        static int getword(char *buf) { char *s; int c; return 0; }\n\
        void tprint(struct node *tree) { }\n\
        static struct node *words = 0;\n\
        int main(int argc, char *argv[]) { char buf[40]; return 0; }\n";

    #[test]
    fn file_scope_chain_order() {
        let u = check(WF);
        assert_eq!(names(&u, &u.file_scope_chain()), ["isletter", "getword", "tprint", "main", "words"]);
    }

    #[test]
    fn local_uplinks_follow_scopes() {
        let u = check(WF);
        let getword = &u.funcs[1];
        assert_eq!(names(&u, &getword.locals), ["buf", "s", "c"]);
        let [buf, s, c] = getword.locals[..] else { panic!() };
        assert_eq!(u.sym(buf).uplink, Uplink::FileScope);
        assert_eq!(u.sym(s).uplink, Uplink::Sym(buf));
        assert_eq!(u.sym(c).uplink, Uplink::Sym(s));
        assert_eq!(getword.entry_tail, Uplink::Sym(buf));
        assert_eq!(getword.body[0].tail, Uplink::Sym(c));
    }

    #[test]
    fn frame_offsets() {
        let u = check("int f(char a, int b) { char c; double d; return 0; }");
        let f = &u.funcs[0];
        let offs: Vec<_> = f
            .locals
            .iter()
            .map(|id| match u.sym(*id).class {
                SymClass::Param { offset } | SymClass::Local { offset } => offset,
                _ => panic!(),
            })
            .collect();
        assert_eq!(offs, [20, 24, 28, 32]);
        assert_eq!(f.frame_size, 40);
    }

    #[test]
    fn pointer_to_struct_layout() {
        let u = check("struct node { int v; struct node *next; }; struct node *p;");
        let (id, _) = &u.data[0];
        let ty = u.sym(*id).ty;
        assert_eq!((u.types.size(ty), u.types.align(ty)), (4, 4));
        let rec = u.types.pointee(ty).unwrap();
        assert_eq!(u.types.size(rec), 8);
    }

    #[test]
    fn undeclared_identifier() {
        let errs = errors("int f(void) { return x; }");
        assert_eq!(errs.len(), 1);
        assert!(errs[0].message.contains("undeclared identifier 'x'"));
        assert_eq!(errs[0].pos, Pos { y: 1, x: 22 });
    }

    #[test]
    fn several_errors_reported() {
        let errs = errors("int f(void) { x = 1; y = 2; return z; }");
        assert_eq!(errs.len(), 3);
    }

    #[test]
    fn static_initializers() {
        let u = check("int a[3] = {1, 2}; char s[] = \"hi\"; char *p = s + 1; struct { unsigned a:3, b:5; } bf = {5, 9};");
        let img = |i: usize| &u.data[i].1;
        assert_eq!(img(0).bytes, [1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(img(1).bytes, b"hi\0");
        assert_eq!(img(2).relocs, [DataReloc { offset: 0, target: DataTarget::Sym(u.data[1].0), addend: 1 }]);
        assert_eq!(img(3).bytes, [5 | (9 << 3), 0, 0, 0]);
    }

    #[test]
    fn enum_constants_and_sizeof() {
        let u = check("enum color { RED = 1, GREEN, BLUE }; int a[BLUE + sizeof(double)];");
        let (id, _) = &u.data[0];
        assert_eq!(u.types.size(u.sym(*id).ty), 4 * 11);
        assert_eq!(names(&u, &u.file_scope_chain()), ["RED", "GREEN", "BLUE", "a"]);
    }

    #[test]
    fn extern_declarations_are_not_in_the_symbol_table() {
        let u = check("extern int shared; int helper(int); int f(void) { return helper(shared); }");
        assert_eq!(names(&u, &u.file_scope_chain()), ["f"]);
    }

    #[test]
    fn type_errors() {
        for src in [
            "int f(void) { int *p; p = 3; return 0; }",
            "struct s { int a; }; int f(struct s *p) { return p->b; }",
            "int f(void) { 1 = 2; return 0; }",
            "void f(void) { return 1; }",
            "int f(void) { break; }",
            "int f(int a) { return a(1); }",
            "int f(void) { const int c = 1; c = 2; return c; }",
        ] {
            assert_eq!(errors(src).len(), 1, "{src}");
        }
    }
}
