//! Symbol-table data model.
//!
//! A [`SymModule`] is the complete external symbol table for one compilation
//! unit: every symbol and type (keyed by uid), the uid of the last global or
//! static, and the stopping points of the unit. Types and symbols refer to each
//! other only by uid, so a module is a tree on disk and a graph in memory.

mod construct;
mod pickle;
mod query;
mod validate;

pub use construct::{construct_symbol, construct_type, Arg, ConstructError};
pub use pickle::{
    from_bytes, read_module, to_bytes, to_bytes_accounted, write_module, PickleAccount,
    PickleCategory, PickleError, MAGIC,
};
pub use query::{find_spoints, lookup_name, visible_chain, LookupError};
pub use validate::ValidationError;

use std::fmt;

use serde::{Deserialize, Serialize};

/// Unique identifier of a symbol or type item within one module.
///
/// Zero is reserved for "none" and terminates uplink chains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct Uid(pub u32);

impl Uid {
    pub const NONE: Uid = Uid(0);

    pub fn is_none(self) -> bool {
        self.0 == 0
    }
}

impl fmt::Display for Uid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A source position: file, 1-based column `x`, 1-based line `y`.
///
/// Patterns may use an empty file, `x == 0` or `y == 0` as wildcards.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Coordinate {
    pub file: String,
    pub x: u32,
    pub y: u32,
}

impl Coordinate {
    pub fn new(file: impl Into<String>, y: u32, x: u32) -> Self {
        Coordinate { file: file.into(), x, y }
    }

    /// True when every component is concrete.
    pub fn is_real(&self) -> bool {
        !self.file.is_empty() && self.x >= 1 && self.y >= 1
    }

    /// Wildcard match: an empty file, zero column or zero line in `self`
    /// matches anything in that position.
    pub fn matches(&self, other: &Coordinate) -> bool {
        (self.file.is_empty() || self.file == other.file)
            && (self.x == 0 || self.x == other.x)
            && (self.y == 0 || self.y == other.y)
    }
}

impl fmt::Display for Coordinate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}.{}", self.file, self.y, self.x)
    }
}

/// One enumeration constant inside an `ENUM` type.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EnumItem {
    pub id: String,
    pub value: i64,
}

impl EnumItem {
    pub fn new(id: impl Into<String>, value: i64) -> Self {
        EnumItem { id: id.into(), value }
    }
}

/// A struct or union member. `bitsize` is nonzero only for bit fields, in
/// which case `lsb` is the bit position of the field's low bit within the
/// storage unit starting at `offset`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FieldRec {
    pub id: String,
    pub ty: Uid,
    pub offset: u32,
    pub bitsize: u32,
    pub lsb: u32,
}

impl FieldRec {
    pub fn is_bitfield(&self) -> bool {
        self.bitsize != 0
    }
}

/// The twelve type constructors.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TypeKind {
    Int,
    Unsigned,
    Float,
    Void,
    Pointer { ty: Uid },
    Enum { tag: String, ids: Vec<EnumItem> },
    Struct { tag: String, fields: Vec<FieldRec> },
    Union { tag: String, fields: Vec<FieldRec> },
    Array { ty: Uid, nelems: u32 },
    Function { ty: Uid, formals: Vec<Uid> },
    Const { ty: Uid },
    Volatile { ty: Uid },
}

impl TypeKind {
    /// 1-based constructor tag in grammar order.
    pub fn tag(&self) -> u32 {
        match self {
            TypeKind::Int => 1,
            TypeKind::Unsigned => 2,
            TypeKind::Float => 3,
            TypeKind::Void => 4,
            TypeKind::Pointer { .. } => 5,
            TypeKind::Enum { .. } => 6,
            TypeKind::Struct { .. } => 7,
            TypeKind::Union { .. } => 8,
            TypeKind::Array { .. } => 9,
            TypeKind::Function { .. } => 10,
            TypeKind::Const { .. } => 11,
            TypeKind::Volatile { .. } => 12,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            TypeKind::Int => "INT",
            TypeKind::Unsigned => "UNSIGNED",
            TypeKind::Float => "FLOAT",
            TypeKind::Void => "VOID",
            TypeKind::Pointer { .. } => "POINTER",
            TypeKind::Enum { .. } => "ENUM",
            TypeKind::Struct { .. } => "STRUCT",
            TypeKind::Union { .. } => "UNION",
            TypeKind::Array { .. } => "ARRAY",
            TypeKind::Function { .. } => "FUNCTION",
            TypeKind::Const { .. } => "CONST",
            TypeKind::Volatile { .. } => "VOLATILE",
        }
    }

    /// Every uid this constructor refers to.
    pub fn referenced_uids(&self) -> Vec<Uid> {
        match self {
            TypeKind::Pointer { ty }
            | TypeKind::Array { ty, .. }
            | TypeKind::Const { ty }
            | TypeKind::Volatile { ty } => vec![*ty],
            TypeKind::Function { ty, formals } => {
                let mut v = vec![*ty];
                v.extend(formals.iter().copied());
                v
            }
            TypeKind::Struct { fields, .. } | TypeKind::Union { fields, .. } => {
                fields.iter().map(|f| f.ty).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// A type constructor together with its `size` and `align` attributes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TypeNode {
    pub kind: TypeKind,
    pub size: u32,
    pub align: u32,
}

impl TypeNode {
    pub fn int(size: u32, align: u32) -> Self {
        TypeNode { kind: TypeKind::Int, size, align }
    }

    pub fn unsigned(size: u32, align: u32) -> Self {
        TypeNode { kind: TypeKind::Unsigned, size, align }
    }

    pub fn float(size: u32, align: u32) -> Self {
        TypeNode { kind: TypeKind::Float, size, align }
    }

    pub fn void() -> Self {
        TypeNode { kind: TypeKind::Void, size: 0, align: 1 }
    }

    pub fn pointer(ty: Uid) -> Self {
        TypeNode { kind: TypeKind::Pointer { ty }, size: 4, align: 4 }
    }

    pub fn enumeration(size: u32, align: u32, tag: impl Into<String>, ids: Vec<EnumItem>) -> Self {
        TypeNode { kind: TypeKind::Enum { tag: tag.into(), ids }, size, align }
    }

    pub fn structure(size: u32, align: u32, tag: impl Into<String>, fields: Vec<FieldRec>) -> Self {
        TypeNode { kind: TypeKind::Struct { tag: tag.into(), fields }, size, align }
    }

    pub fn union(size: u32, align: u32, tag: impl Into<String>, fields: Vec<FieldRec>) -> Self {
        TypeNode { kind: TypeKind::Union { tag: tag.into(), fields }, size, align }
    }

    pub fn array(ty: Uid, nelems: u32, elem_size: u32, align: u32) -> Self {
        TypeNode { kind: TypeKind::Array { ty, nelems }, size: nelems * elem_size, align }
    }

    pub fn function(ty: Uid, formals: Vec<Uid>) -> Self {
        TypeNode { kind: TypeKind::Function { ty, formals }, size: 0, align: 1 }
    }
}

/// The six symbol constructors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SymbolKind {
    Static { index: u32 },
    Global { index: u32 },
    Typedef,
    Local { offset: i32 },
    Param { offset: i32 },
    EnumConst { value: i64 },
}

impl SymbolKind {
    pub fn tag(&self) -> u32 {
        match self {
            SymbolKind::Static { .. } => 1,
            SymbolKind::Global { .. } => 2,
            SymbolKind::Typedef => 3,
            SymbolKind::Local { .. } => 4,
            SymbolKind::Param { .. } => 5,
            SymbolKind::EnumConst { .. } => 6,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SymbolKind::Static { .. } => "STATIC",
            SymbolKind::Global { .. } => "GLOBAL",
            SymbolKind::Typedef => "TYPEDEF",
            SymbolKind::Local { .. } => "LOCAL",
            SymbolKind::Param { .. } => "PARAM",
            SymbolKind::EnumConst { .. } => "ENUMCONST",
        }
    }

    /// Index into the unit's address vector, for STATIC and GLOBAL.
    pub fn address_index(&self) -> Option<u32> {
        match *self {
            SymbolKind::Static { index } | SymbolKind::Global { index } => Some(index),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Symbol {
    pub kind: SymbolKind,
    pub id: String,
    pub uid: Uid,
    /// uname of the defining unit.
    pub module: u32,
    pub src: Coordinate,
    pub ty: Uid,
    pub uplink: Uid,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ItemKind {
    Symbol(Symbol),
    Type(TypeNode),
}

/// A symbol or a type, tagged with its uid.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Item {
    pub kind: ItemKind,
    pub uid: Uid,
}

impl Item {
    pub fn symbol(sym: Symbol) -> Self {
        let uid = sym.uid;
        Item { kind: ItemKind::Symbol(sym), uid }
    }

    pub fn ty(uid: Uid, node: TypeNode) -> Self {
        Item { kind: ItemKind::Type(node), uid }
    }

    pub fn as_symbol(&self) -> Option<&Symbol> {
        match &self.kind {
            ItemKind::Symbol(s) => Some(s),
            ItemKind::Type(_) => None,
        }
    }

    pub fn as_type(&self) -> Option<&TypeNode> {
        match &self.kind {
            ItemKind::Type(t) => Some(t),
            ItemKind::Symbol(_) => None,
        }
    }
}

/// A stopping point: where it is and the last symbol visible there.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SPoint {
    pub src: Coordinate,
    pub tail: Uid,
}

/// The symbol table of one compilation unit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct SymModule {
    pub file: String,
    pub uname: u32,
    pub nuids: u32,
    pub items: Vec<Item>,
    /// uid of the last global or static variable; the head of the globals chain.
    pub globals: Uid,
    pub spoints: Vec<SPoint>,
}

impl SymModule {
    pub fn new(file: impl Into<String>, uname: u32) -> Self {
        SymModule { file: file.into(), uname, ..Default::default() }
    }

    /// Linear lookup by uid. Modules are small and items are usually stored
    /// in uid order, so try the direct slot first.
    pub fn item(&self, uid: Uid) -> Option<&Item> {
        if uid.is_none() {
            return None;
        }
        let guess = uid.0 as usize - 1;
        if let Some(item) = self.items.get(guess) {
            if item.uid == uid {
                return Some(item);
            }
        }
        self.items.iter().find(|it| it.uid == uid)
    }

    pub fn symbol(&self, uid: Uid) -> Option<&Symbol> {
        self.item(uid).and_then(Item::as_symbol)
    }

    pub fn type_node(&self, uid: Uid) -> Option<&TypeNode> {
        self.item(uid).and_then(Item::as_type)
    }

    pub fn symbols(&self) -> impl Iterator<Item = &Symbol> {
        self.items.iter().filter_map(Item::as_symbol)
    }

    /// Strips CONST/VOLATILE qualifiers.
    pub fn unqualified(&self, mut uid: Uid) -> Option<(Uid, &TypeNode)> {
        loop {
            let node = self.type_node(uid)?;
            match node.kind {
                TypeKind::Const { ty } | TypeKind::Volatile { ty } => uid = ty,
                _ => return Some((uid, node)),
            }
        }
    }

    /// Validate every invariant; see [`ValidationError`].
    pub fn validate(&self) -> Result<(), ValidationError> {
        validate::validate(self)
    }
}
