//! Hash-consed C types with ILP32 layout.

use std::collections::HashMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TypeId(pub u32);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum CType {
    Void,
    Int { size: u8, signed: bool },
    Float { size: u8 },
    Pointer(TypeId),
    Array(TypeId, u32),
    Function { ret: TypeId, params: Vec<TypeId> },
    /// Index into [`TypeTable::records`]; records are nominal.
    Record(u32),
    /// Index into [`TypeTable::enums`].
    Enum(u32),
    Const(TypeId),
    Volatile(TypeId),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub name: String,
    pub ty: TypeId,
    pub offset: u32,
    pub bitsize: u8,
    pub lsb: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordDef {
    pub is_union: bool,
    pub tag: Option<String>,
    pub fields: Vec<Field>,
    pub size: u32,
    pub align: u32,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumDef {
    pub tag: Option<String>,
    pub items: Vec<(String, i64)>,
}

/// Arithmetic class of a promoted scalar value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum NumKind {
    I32,
    U32,
    F32,
    F64,
}

impl NumKind {
    pub fn is_float(self) -> bool {
        matches!(self, NumKind::F32 | NumKind::F64)
    }
}

#[derive(Debug, Clone)]
pub struct TypeTable {
    types: Vec<CType>,
    map: HashMap<CType, TypeId>,
    pub records: Vec<RecordDef>,
    pub enums: Vec<EnumDef>,
}

impl TypeTable {
    pub const VOID: TypeId = TypeId(0);
    pub const CHAR: TypeId = TypeId(1);
    pub const UCHAR: TypeId = TypeId(2);
    pub const SHORT: TypeId = TypeId(3);
    pub const USHORT: TypeId = TypeId(4);
    pub const INT: TypeId = TypeId(5);
    pub const UINT: TypeId = TypeId(6);
    pub const FLOAT: TypeId = TypeId(7);
    pub const DOUBLE: TypeId = TypeId(8);

    pub fn new() -> Self {
        let mut t = TypeTable { types: Vec::new(), map: HashMap::new(), records: Vec::new(), enums: Vec::new() };
        for ty in [
            CType::Void,
            CType::Int { size: 1, signed: true },
            CType::Int { size: 1, signed: false },
            CType::Int { size: 2, signed: true },
            CType::Int { size: 2, signed: false },
            CType::Int { size: 4, signed: true },
            CType::Int { size: 4, signed: false },
            CType::Float { size: 4 },
            CType::Float { size: 8 },
        ] {
            t.intern(ty);
        }
        t
    }

    pub fn intern(&mut self, ty: CType) -> TypeId {
        if let Some(id) = self.map.get(&ty) {
            return *id;
        }
        let id = TypeId(self.types.len() as u32);
        self.types.push(ty.clone());
        self.map.insert(ty, id);
        id
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn get(&self, id: TypeId) -> &CType {
        &self.types[id.0 as usize]
    }

    pub fn pointer(&mut self, to: TypeId) -> TypeId {
        self.intern(CType::Pointer(to))
    }

    pub fn new_record(&mut self, is_union: bool, tag: Option<String>) -> TypeId {
        let idx = self.records.len() as u32;
        self.records.push(RecordDef { is_union, tag, fields: Vec::new(), size: 0, align: 1, complete: false });
        self.intern(CType::Record(idx))
    }

    pub fn new_enum(&mut self, tag: Option<String>) -> TypeId {
        let idx = self.enums.len() as u32;
        self.enums.push(EnumDef { tag, items: Vec::new() });
        self.intern(CType::Enum(idx))
    }

    /// Strip top-level qualifiers.
    pub fn unqual(&self, mut id: TypeId) -> TypeId {
        loop {
            match self.get(id) {
                CType::Const(t) | CType::Volatile(t) => id = *t,
                _ => return id,
            }
        }
    }

    pub fn is_const(&self, mut id: TypeId) -> bool {
        loop {
            match self.get(id) {
                CType::Const(_) => return true,
                CType::Volatile(t) => id = *t,
                _ => return false,
            }
        }
    }

    pub fn size(&self, id: TypeId) -> u32 {
        match self.get(id) {
            CType::Void | CType::Function { .. } => 0,
            CType::Int { size, .. } | CType::Float { size } => *size as u32,
            CType::Pointer(_) | CType::Enum(_) => 4,
            CType::Array(t, n) => self.size(*t) * n,
            CType::Record(r) => self.records[*r as usize].size,
            CType::Const(t) | CType::Volatile(t) => self.size(*t),
        }
    }

    pub fn align(&self, id: TypeId) -> u32 {
        match self.get(id) {
            CType::Void | CType::Function { .. } => 1,
            CType::Int { size, .. } | CType::Float { size } => *size as u32,
            CType::Pointer(_) | CType::Enum(_) => 4,
            CType::Array(t, _) => self.align(*t),
            CType::Record(r) => self.records[*r as usize].align,
            CType::Const(t) | CType::Volatile(t) => self.align(*t),
        }
    }

    pub fn is_complete(&self, id: TypeId) -> bool {
        match self.get(self.unqual(id)) {
            CType::Void | CType::Function { .. } => false,
            CType::Record(r) => self.records[*r as usize].complete,
            CType::Array(t, _) => self.is_complete(*t),
            _ => true,
        }
    }

    pub fn is_integer(&self, id: TypeId) -> bool {
        matches!(self.get(self.unqual(id)), CType::Int { .. } | CType::Enum(_))
    }

    pub fn is_arith(&self, id: TypeId) -> bool {
        matches!(self.get(self.unqual(id)), CType::Int { .. } | CType::Enum(_) | CType::Float { .. })
    }

    pub fn is_pointer(&self, id: TypeId) -> bool {
        matches!(self.get(self.unqual(id)), CType::Pointer(_))
    }

    pub fn is_scalar(&self, id: TypeId) -> bool {
        self.is_arith(id) || self.is_pointer(id)
    }

    pub fn is_void(&self, id: TypeId) -> bool {
        matches!(self.get(self.unqual(id)), CType::Void)
    }

    pub fn is_record(&self, id: TypeId) -> bool {
        matches!(self.get(self.unqual(id)), CType::Record(_))
    }

    pub fn is_array(&self, id: TypeId) -> bool {
        matches!(self.get(self.unqual(id)), CType::Array(..))
    }

    pub fn is_function(&self, id: TypeId) -> bool {
        matches!(self.get(self.unqual(id)), CType::Function { .. })
    }

    pub fn pointee(&self, id: TypeId) -> Option<TypeId> {
        match self.get(self.unqual(id)) {
            CType::Pointer(t) => Some(*t),
            _ => None,
        }
    }

    pub fn element(&self, id: TypeId) -> Option<TypeId> {
        match self.get(self.unqual(id)) {
            CType::Array(t, _) => Some(*t),
            _ => None,
        }
    }

    pub fn record(&self, id: TypeId) -> Option<&RecordDef> {
        match self.get(self.unqual(id)) {
            CType::Record(r) => Some(&self.records[*r as usize]),
            _ => None,
        }
    }

    /// Integer promotion: small integers and enums become `int`.
    pub fn promote(&self, id: TypeId) -> TypeId {
        match self.get(self.unqual(id)) {
            CType::Int { size, .. } if *size < 4 => Self::INT,
            CType::Enum(_) => Self::INT,
            _ => self.unqual(id),
        }
    }

    /// Usual arithmetic conversions of two arithmetic operands.
    pub fn common(&self, a: TypeId, b: TypeId) -> TypeId {
        let (a, b) = (self.promote(a), self.promote(b));
        if a == Self::DOUBLE || b == Self::DOUBLE {
            Self::DOUBLE
        } else if a == Self::FLOAT || b == Self::FLOAT {
            Self::FLOAT
        } else if a == Self::UINT || b == Self::UINT {
            Self::UINT
        } else {
            Self::INT
        }
    }

    /// Arithmetic class of a value of this type once loaded.
    pub fn num_kind(&self, id: TypeId) -> NumKind {
        match self.get(self.unqual(id)) {
            CType::Float { size: 4 } => NumKind::F32,
            CType::Float { .. } => NumKind::F64,
            CType::Int { size: 4, signed: false } | CType::Pointer(_) => NumKind::U32,
            _ => NumKind::I32,
        }
    }

    pub fn is_signed(&self, id: TypeId) -> bool {
        match self.get(self.unqual(id)) {
            CType::Int { signed, .. } => *signed,
            CType::Enum(_) => true,
            _ => false,
        }
    }

    /// Wrap an integer to the range of an integer or pointer type.
    pub fn wrap(&self, id: TypeId, v: i64) -> i64 {
        match self.get(self.unqual(id)) {
            CType::Int { size, signed } => {
                let bits = *size as u32 * 8;
                let m = v & ((1i64 << bits) - 1);
                if *signed && m >> (bits - 1) != 0 {
                    m - (1i64 << bits)
                } else {
                    m
                }
            }
            CType::Enum(_) => v as i32 as i64,
            _ => v as u32 as i64,
        }
    }

    /// Structural compatibility, ignoring top-level qualifiers.
    pub fn compatible(&self, a: TypeId, b: TypeId) -> bool {
        let (a, b) = (self.unqual(a), self.unqual(b));
        if a == b {
            return true;
        }
        match (self.get(a), self.get(b)) {
            (CType::Pointer(x), CType::Pointer(y)) => self.compatible(*x, *y),
            (CType::Array(x, n), CType::Array(y, m)) => n == m && self.compatible(*x, *y),
            (CType::Enum(_), CType::Int { size: 4, signed: true })
            | (CType::Int { size: 4, signed: true }, CType::Enum(_)) => true,
            (CType::Function { ret: r1, params: p1 }, CType::Function { ret: r2, params: p2 }) => {
                self.compatible(*r1, *r2)
                    && p1.len() == p2.len()
                    && p1.iter().zip(p2).all(|(x, y)| self.compatible(*x, *y))
            }
            _ => false,
        }
    }

    /// Render a type for diagnostics.
    pub fn display(&self, id: TypeId) -> String {
        match self.get(id) {
            CType::Void => "void".into(),
            CType::Int { size: 1, signed: true } => "char".into(),
            CType::Int { size: 1, .. } => "unsigned char".into(),
            CType::Int { size: 2, signed: true } => "short".into(),
            CType::Int { size: 2, .. } => "unsigned short".into(),
            CType::Int { signed: true, .. } => "int".into(),
            CType::Int { .. } => "unsigned".into(),
            CType::Float { size: 4 } => "float".into(),
            CType::Float { .. } => "double".into(),
            CType::Pointer(t) => format!("{} *", self.display(*t)),
            CType::Array(t, n) => format!("{}[{n}]", self.display(*t)),
            CType::Function { ret, params } => {
                let ps: Vec<_> = params.iter().map(|p| self.display(*p)).collect();
                format!("{}({})", self.display(*ret), ps.join(", "))
            }
            CType::Record(r) => {
                let rec = &self.records[*r as usize];
                let kw = if rec.is_union { "union" } else { "struct" };
                format!("{kw} {}", rec.tag.as_deref().unwrap_or("<anonymous>"))
            }
            CType::Enum(e) => format!("enum {}", self.enums[*e as usize].tag.as_deref().unwrap_or("<anonymous>")),
            CType::Const(t) => format!("const {}", self.display(*t)),
            CType::Volatile(t) => format!("volatile {}", self.display(*t)),
        }
    }
}

impl Default for TypeTable {
    fn default() -> Self {
        Self::new()
    }
}

/// A struct or union member before layout.
pub struct MemberSpec {
    pub name: String,
    pub ty: TypeId,
    pub bitsize: Option<u8>,
}

/// Lay out members and complete the record. Bit fields occupy 4-byte
/// storage units filled from the least significant bit upward; `lsb` is the
/// shift that brings a field to bit 0.
pub fn layout_record(types: &mut TypeTable, rec: TypeId, members: Vec<MemberSpec>) {
    let CType::Record(idx) = *types.get(rec) else { panic!("not a record") };
    let is_union = types.records[idx as usize].is_union;
    let mut fields = Vec::new();
    let mut offset = 0u32;
    let mut size = 0u32;
    let mut align = 1u32;
    // (unit offset, bits used) of the open bit-field storage unit
    let mut unit: Option<(u32, u32)> = None;
    for m in members {
        let (a, s) = (types.align(m.ty), types.size(m.ty));
        match m.bitsize {
            Some(0) => unit = None,
            Some(bits) => {
                align = align.max(4);
                let (uoff, used) = match unit {
                    Some((uoff, used)) if !is_union && used + bits as u32 <= 32 => (uoff, used),
                    _ => {
                        let uoff = if is_union { 0 } else { offset.next_multiple_of(4) };
                        offset = uoff + 4;
                        (uoff, 0)
                    }
                };
                fields.push(Field { name: m.name, ty: m.ty, offset: uoff, bitsize: bits, lsb: used as u8 });
                unit = Some((uoff, used + bits as u32));
                size = size.max(uoff + 4);
            }
            None => {
                unit = None;
                align = align.max(a);
                let off = if is_union { 0 } else { offset.next_multiple_of(a) };
                fields.push(Field { name: m.name, ty: m.ty, offset: off, bitsize: 0, lsb: 0 });
                offset = off + s;
                size = size.max(off + s);
            }
        }
    }
    let r = &mut types.records[idx as usize];
    r.fields = fields;
    r.align = align;
    r.size = size.next_multiple_of(align);
    r.complete = true;
}
