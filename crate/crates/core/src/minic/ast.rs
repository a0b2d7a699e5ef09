//! Untyped syntax tree. Every node records the position of its first token.

use super::Pos;

#[derive(Debug, Clone, PartialEq)]
pub struct TranslationUnit {
    pub file: String,
    pub decls: Vec<ExternalDecl>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExternalDecl {
    Decl(Declaration),
    Func(FunctionDef),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Storage {
    Typedef,
    Static,
    Extern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Quals {
    pub konst: bool,
    pub volatile: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TypeSpec {
    Void,
    Char { unsigned: Option<bool> },
    Short { unsigned: bool },
    Int { unsigned: bool },
    Float,
    Double,
    Record(RecordSpec),
    Enum(EnumSpec),
    Named(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeclSpecs {
    pub storage: Option<Storage>,
    pub ty: TypeSpec,
    pub quals: Quals,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecordSpec {
    pub is_union: bool,
    pub tag: Option<String>,
    pub members: Option<Vec<MemberDecl>>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemberDecl {
    pub specs: DeclSpecs,
    pub declarators: Vec<(Declarator, Option<Expr>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumSpec {
    pub tag: Option<String>,
    pub items: Option<Vec<Enumerator>>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Enumerator {
    pub name: String,
    pub value: Option<Expr>,
    pub pos: Pos,
}

/// One step of a declarator, applied to the base type in order.
#[derive(Debug, Clone, PartialEq)]
pub enum Derived {
    Pointer(Quals),
    Array(Option<Box<Expr>>),
    Function(Vec<ParamDecl>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declarator {
    pub name: Option<(String, Pos)>,
    pub derived: Vec<Derived>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamDecl {
    pub specs: DeclSpecs,
    pub declarator: Declarator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TypeName {
    pub specs: DeclSpecs,
    pub declarator: Declarator,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Init {
    Expr(Expr),
    List(Vec<Init>, Pos),
}

impl Init {
    pub fn pos(&self) -> Pos {
        match self {
            Init::Expr(e) => e.pos,
            Init::List(_, p) => *p,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitDeclarator {
    pub declarator: Declarator,
    pub init: Option<Init>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Declaration {
    pub specs: DeclSpecs,
    pub declarators: Vec<InitDeclarator>,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FunctionDef {
    pub specs: DeclSpecs,
    pub declarator: Declarator,
    pub body: Block,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub items: Vec<Stmt>,
    pub lbrace: Pos,
    pub rbrace: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StmtKind {
    Expr(Expr),
    Empty,
    Block(Block),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    While(Expr, Box<Stmt>),
    For(Option<Expr>, Option<Expr>, Option<Expr>, Box<Stmt>),
    Return(Option<Expr>),
    Break,
    Continue,
    Decl(Declaration),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnOp {
    Neg,
    Plus,
    LNot,
    BitNot,
    Deref,
    Addr,
    PreInc,
    PreDec,
    PostInc,
    PostDec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Rem,
    Shl,
    Shr,
    BitAnd,
    BitOr,
    BitXor,
    Eq,
    Ne,
    Lt,
    Gt,
    Le,
    Ge,
    LogAnd,
    LogOr,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    pub kind: ExprKind,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExprKind {
    Int { value: u64, unsigned: bool },
    Float { value: f64, single: bool },
    Char(i64),
    Str(Vec<u8>),
    Ident(String),
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// `None` for plain `=`, otherwise the compound operator.
    Assign(Option<BinOp>, Box<Expr>, Box<Expr>),
    Call(Box<Expr>, Vec<Expr>),
    Index(Box<Expr>, Box<Expr>),
    Member(Box<Expr>, String, bool),
    Cast(Box<TypeName>, Box<Expr>),
    SizeofType(Box<TypeName>),
    SizeofExpr(Box<Expr>),
}
