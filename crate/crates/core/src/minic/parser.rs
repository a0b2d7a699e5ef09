//! Recursive-descent parser for MiniC.

use std::collections::HashMap;

use super::ast::*;
use super::lexer::{tokenize, Kw, Tok, Token};
use super::{Diagnostic, Pos};

type PResult<T> = Result<T, Diagnostic>;

/// Parse a whole translation unit. Syntax errors are collected; parsing
/// resynchronizes at the next `;` or `}` and carries on.
pub fn parse(src: &str, file: &str) -> Result<TranslationUnit, Vec<Diagnostic>> {
    let toks = tokenize(src)?;
    let mut p = Parser { toks, i: 0, errs: Vec::new(), typedefs: vec![HashMap::new()] };
    let mut decls = Vec::new();
    while !p.at_eof() {
        let start = p.i;
        match p.external() {
            Ok(d) => decls.push(d),
            Err(e) => {
                p.errs.push(e);
                p.sync_top();
                if p.i == start {
                    p.i += 1;
                }
            }
        }
    }
    if p.errs.is_empty() {
        Ok(TranslationUnit { file: file.to_owned(), decls })
    } else {
        Err(p.errs)
    }
}

struct Parser {
    toks: Vec<Token>,
    i: usize,
    errs: Vec<Diagnostic>,
    /// Scoped map: name -> is it a typedef name in that scope.
    typedefs: Vec<HashMap<String, bool>>,
}

fn is_assign_op(p: &str) -> Option<Option<BinOp>> {
    Some(match p {
        "=" => None,
        "+=" => Some(BinOp::Add),
        "-=" => Some(BinOp::Sub),
        "*=" => Some(BinOp::Mul),
        "/=" => Some(BinOp::Div),
        "%=" => Some(BinOp::Rem),
        "&=" => Some(BinOp::BitAnd),
        "|=" => Some(BinOp::BitOr),
        "^=" => Some(BinOp::BitXor),
        "<<=" => Some(BinOp::Shl),
        ">>=" => Some(BinOp::Shr),
        _ => return None,
    })
}

fn binop_info(p: &str) -> Option<(BinOp, u8)> {
    Some(match p {
        "||" => (BinOp::LogOr, 1),
        "&&" => (BinOp::LogAnd, 2),
        "|" => (BinOp::BitOr, 3),
        "^" => (BinOp::BitXor, 4),
        "&" => (BinOp::BitAnd, 5),
        "==" => (BinOp::Eq, 6),
        "!=" => (BinOp::Ne, 6),
        "<" => (BinOp::Lt, 7),
        ">" => (BinOp::Gt, 7),
        "<=" => (BinOp::Le, 7),
        ">=" => (BinOp::Ge, 7),
        "<<" => (BinOp::Shl, 8),
        ">>" => (BinOp::Shr, 8),
        "+" => (BinOp::Add, 9),
        "-" => (BinOp::Sub, 9),
        "*" => (BinOp::Mul, 10),
        "/" => (BinOp::Div, 10),
        "%" => (BinOp::Rem, 10),
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let j = (self.i + k).min(self.toks.len() - 1);
        &self.toks[j].tok
    }

    fn pos(&self) -> Pos {
        self.toks[self.i].pos
    }

    fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }

    fn advance(&mut self) -> Token {
        let t = self.toks[self.i].clone();
        if !matches!(t.tok, Tok::Eof) {
            self.i += 1;
        }
        t
    }

    fn is_punct(&self, p: &str) -> bool {
        matches!(self.peek(), Tok::Punct(q) if *q == p)
    }

    fn is_kw(&self, k: Kw) -> bool {
        matches!(self.peek(), Tok::Kw(q) if *q == k)
    }

    fn eat_punct(&mut self, p: &str) -> bool {
        if self.is_punct(p) {
            self.i += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, p: &str) -> PResult<Pos> {
        if self.is_punct(p) {
            Ok(self.advance().pos)
        } else {
            Err(self.unexpected(&format!("'{p}'")))
        }
    }

    fn unexpected(&self, wanted: &str) -> Diagnostic {
        Diagnostic { pos: self.pos(), message: format!("expected {wanted} before {}", self.peek()) }
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let pos = self.advance().pos;
                Ok((s, pos))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn sync_top(&mut self) {
        let mut depth = 0usize;
        while !self.at_eof() {
            match self.advance().tok {
                Tok::Punct(";") if depth == 0 => return,
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") => {
                    depth = depth.saturating_sub(1);
                    if depth == 0 {
                        return;
                    }
                }
                _ => {}
            }
        }
    }

    fn sync_stmt(&mut self) {
        let mut depth = 0usize;
        while !self.at_eof() {
            match self.peek() {
                Tok::Punct(";") if depth == 0 => {
                    self.i += 1;
                    return;
                }
                Tok::Punct("}") if depth == 0 => return,
                Tok::Punct("{") => depth += 1,
                Tok::Punct("}") => depth -= 1,
                _ => {}
            }
            self.i += 1;
        }
    }

    fn is_typedef_name(&self, name: &str) -> bool {
        for scope in self.typedefs.iter().rev() {
            if let Some(is_td) = scope.get(name) {
                return *is_td;
            }
        }
        false
    }

    fn declare_name(&mut self, name: &str, is_typedef: bool) {
        self.typedefs.last_mut().expect("scope").insert(name.to_owned(), is_typedef);
    }

    fn starts_type(&self) -> bool {
        match self.peek() {
            Tok::Kw(k) => matches!(
                k,
                Kw::Void
                    | Kw::Char
                    | Kw::Short
                    | Kw::Int
                    | Kw::Long
                    | Kw::Signed
                    | Kw::Unsigned
                    | Kw::Float
                    | Kw::Double
                    | Kw::Struct
                    | Kw::Union
                    | Kw::Enum
                    | Kw::Typedef
                    | Kw::Static
                    | Kw::Extern
                    | Kw::Const
                    | Kw::Volatile
            ),
            Tok::Ident(s) => self.is_typedef_name(s),
            _ => false,
        }
    }

    fn decl_specs(&mut self) -> PResult<DeclSpecs> {
        let pos = self.pos();
        let mut storage = None;
        let mut quals = Quals::default();
        let (mut void, mut char_, mut short, mut int, mut long, mut float, mut double) =
            (false, false, false, false, false, false, false);
        let mut signedness: Option<bool> = None;
        let mut other: Option<TypeSpec> = None;
        loop {
            let tpos = self.pos();
            match self.peek().clone() {
                Tok::Kw(k) => {
                    match k {
                        Kw::Typedef | Kw::Static | Kw::Extern => {
                            if storage.is_some() {
                                return Err(Diagnostic::new(tpos, "multiple storage classes"));
                            }
                            storage = Some(match k {
                                Kw::Typedef => Storage::Typedef,
                                Kw::Static => Storage::Static,
                                _ => Storage::Extern,
                            });
                        }
                        Kw::Const => quals.konst = true,
                        Kw::Volatile => quals.volatile = true,
                        Kw::Void => void = true,
                        Kw::Char => char_ = true,
                        Kw::Short => short = true,
                        Kw::Int => int = true,
                        Kw::Long => long = true,
                        Kw::Float => float = true,
                        Kw::Double => double = true,
                        Kw::Signed => signedness = Some(false),
                        Kw::Unsigned => signedness = Some(true),
                        Kw::Struct | Kw::Union => {
                            self.advance();
                            other = Some(TypeSpec::Record(self.record_spec(k == Kw::Union, tpos)?));
                            continue;
                        }
                        Kw::Enum => {
                            self.advance();
                            other = Some(TypeSpec::Enum(self.enum_spec(tpos)?));
                            continue;
                        }
                        _ => break,
                    }
                    self.advance();
                }
                Tok::Ident(name)
                    if other.is_none()
                        && !(void || char_ || short || int || long || float || double)
                        && signedness.is_none()
                        && self.is_typedef_name(&name) =>
                {
                    self.advance();
                    other = Some(TypeSpec::Named(name));
                }
                _ => break,
            }
        }
        let basic = void || char_ || short || int || long || float || double || signedness.is_some();
        let ty = match other {
            Some(t) if !basic => t,
            Some(_) => return Err(Diagnostic::new(pos, "conflicting type specifiers")),
            None if void => TypeSpec::Void,
            None if char_ => TypeSpec::Char { unsigned: signedness },
            None if short => TypeSpec::Short { unsigned: signedness == Some(true) },
            None if float => TypeSpec::Float,
            None if double => TypeSpec::Double,
            None if int || long || signedness.is_some() => {
                TypeSpec::Int { unsigned: signedness == Some(true) }
            }
            None => return Err(self.unexpected("type specifier")),
        };
        Ok(DeclSpecs { storage, ty, quals, pos })
    }

    fn record_spec(&mut self, is_union: bool, pos: Pos) -> PResult<RecordSpec> {
        let tag = match self.peek() {
            Tok::Ident(_) => Some(self.ident()?.0),
            _ => None,
        };
        let members = if self.eat_punct("{") {
            let mut members = Vec::new();
            while !self.eat_punct("}") {
                let specs = self.decl_specs()?;
                let mut declarators = Vec::new();
                loop {
                    let d = if self.is_punct(":") {
                        Declarator { name: None, derived: Vec::new(), pos: self.pos() }
                    } else {
                        self.declarator(false)?
                    };
                    let width = if self.eat_punct(":") { Some(self.conditional()?) } else { None };
                    declarators.push((d, width));
                    if !self.eat_punct(",") {
                        break;
                    }
                }
                self.expect(";")?;
                members.push(MemberDecl { specs, declarators });
            }
            Some(members)
        } else {
            None
        };
        if tag.is_none() && members.is_none() {
            return Err(self.unexpected("struct tag or '{'"));
        }
        Ok(RecordSpec { is_union, tag, members, pos })
    }

    fn enum_spec(&mut self, pos: Pos) -> PResult<EnumSpec> {
        let tag = match self.peek() {
            Tok::Ident(_) => Some(self.ident()?.0),
            _ => None,
        };
        let items = if self.eat_punct("{") {
            let mut items = Vec::new();
            while !self.is_punct("}") {
                let (name, npos) = self.ident()?;
                let value = if self.eat_punct("=") { Some(self.conditional()?) } else { None };
                self.declare_name(&name, false);
                items.push(Enumerator { name, value, pos: npos });
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect("}")?;
            Some(items)
        } else {
            None
        };
        if tag.is_none() && items.is_none() {
            return Err(self.unexpected("enum tag or '{'"));
        }
        Ok(EnumSpec { tag, items, pos })
    }

    /// Parses a (possibly abstract) declarator.
    fn declarator(&mut self, abstract_ok: bool) -> PResult<Declarator> {
        let pos = self.pos();
        if self.eat_punct("*") {
            let mut quals = Quals::default();
            loop {
                if self.is_kw(Kw::Const) {
                    quals.konst = true;
                } else if self.is_kw(Kw::Volatile) {
                    quals.volatile = true;
                } else {
                    break;
                }
                self.advance();
            }
            let mut inner = self.declarator(abstract_ok)?;
            inner.derived.insert(0, Derived::Pointer(quals));
            inner.pos = pos;
            return Ok(inner);
        }
        let mut d = if matches!(self.peek(), Tok::Ident(_)) {
            let (name, npos) = self.ident()?;
            Declarator { name: Some((name, npos)), derived: Vec::new(), pos }
        } else if self.is_punct("(") && self.paren_is_nested_declarator() {
            self.advance();
            let inner = self.declarator(abstract_ok)?;
            self.expect(")")?;
            inner
        } else if abstract_ok {
            Declarator { name: None, derived: Vec::new(), pos }
        } else {
            return Err(self.unexpected("identifier"));
        };
        let mut suffixes = Vec::new();
        loop {
            if self.eat_punct("[") {
                let size = if self.is_punct("]") { None } else { Some(Box::new(self.conditional()?)) };
                self.expect("]")?;
                suffixes.push(Derived::Array(size));
            } else if self.is_punct("(") {
                self.advance();
                suffixes.push(Derived::Function(self.params()?));
            } else {
                break;
            }
        }
        // suffixes bind tighter than the prefix and apply right to left
        suffixes.reverse();
        suffixes.append(&mut d.derived);
        d.derived = suffixes;
        d.pos = pos;
        Ok(d)
    }

    /// At `(`: does it open a nested declarator like `(*f)` rather than a
    /// parameter list?
    fn paren_is_nested_declarator(&self) -> bool {
        match self.peek_at(1) {
            Tok::Punct("*") | Tok::Punct("(") => true,
            Tok::Ident(s) => !self.is_typedef_name(s),
            _ => false,
        }
    }

    fn params(&mut self) -> PResult<Vec<ParamDecl>> {
        let mut params = Vec::new();
        if self.eat_punct(")") {
            return Ok(params);
        }
        if self.is_kw(Kw::Void) && matches!(self.peek_at(1), Tok::Punct(")")) {
            self.advance();
            self.advance();
            return Ok(params);
        }
        loop {
            let specs = self.decl_specs()?;
            let declarator = self.declarator(true)?;
            params.push(ParamDecl { specs, declarator });
            if !self.eat_punct(",") {
                break;
            }
        }
        self.expect(")")?;
        Ok(params)
    }

    fn type_name(&mut self) -> PResult<TypeName> {
        let specs = self.decl_specs()?;
        if specs.storage.is_some() {
            return Err(Diagnostic::new(specs.pos, "storage class in type name"));
        }
        let declarator = self.declarator(true)?;
        if declarator.name.is_some() {
            return Err(Diagnostic::new(declarator.pos, "unexpected identifier in type name"));
        }
        Ok(TypeName { specs, declarator })
    }

    fn initializer(&mut self) -> PResult<Init> {
        if self.is_punct("{") {
            let pos = self.advance().pos;
            let mut items = Vec::new();
            while !self.is_punct("}") {
                items.push(self.initializer()?);
                if !self.eat_punct(",") {
                    break;
                }
            }
            self.expect("}")?;
            Ok(Init::List(items, pos))
        } else {
            Ok(Init::Expr(self.assignment()?))
        }
    }

    fn external(&mut self) -> PResult<ExternalDecl> {
        let specs = self.decl_specs()?;
        let pos = specs.pos;
        if self.eat_punct(";") {
            return Ok(ExternalDecl::Decl(Declaration { specs, declarators: Vec::new(), pos }));
        }
        let first = self.declarator(false)?;
        if self.is_punct("{") && matches!(first.derived.last(), Some(Derived::Function(_))) {
            if let Some((name, _)) = &first.name {
                self.declare_name(name, false);
            }
            let body = self.function_body(&first)?;
            return Ok(ExternalDecl::Func(FunctionDef { specs, declarator: first, body }));
        }
        let decl = self.rest_of_declaration(specs, first, pos)?;
        Ok(ExternalDecl::Decl(decl))
    }

    fn rest_of_declaration(&mut self, specs: DeclSpecs, first: Declarator, pos: Pos) -> PResult<Declaration> {
        let is_td = specs.storage == Some(Storage::Typedef);
        let mut declarators = Vec::new();
        let mut d = first;
        loop {
            if let Some((name, _)) = &d.name {
                self.declare_name(name, is_td);
            }
            let init = if self.eat_punct("=") { Some(self.initializer()?) } else { None };
            declarators.push(InitDeclarator { declarator: d, init });
            if !self.eat_punct(",") {
                break;
            }
            d = self.declarator(false)?;
        }
        self.expect(";")?;
        Ok(Declaration { specs, declarators, pos })
    }

    fn function_body(&mut self, decl: &Declarator) -> PResult<Block> {
        self.typedefs.push(HashMap::new());
        if let Some(Derived::Function(params)) = decl.derived.last() {
            for p in params {
                if let Some((name, _)) = &p.declarator.name {
                    self.declare_name(name, false);
                }
            }
        }
        let r = self.block_contents();
        self.typedefs.pop();
        r
    }

    fn block(&mut self) -> PResult<Block> {
        self.typedefs.push(HashMap::new());
        let r = self.block_contents();
        self.typedefs.pop();
        r
    }

    fn block_contents(&mut self) -> PResult<Block> {
        let lbrace = self.expect("{")?;
        let mut items = Vec::new();
        loop {
            if self.is_punct("}") {
                let rbrace = self.advance().pos;
                return Ok(Block { items, lbrace, rbrace });
            }
            if self.at_eof() {
                return Err(self.unexpected("'}'"));
            }
            let start = self.i;
            match self.statement() {
                Ok(s) => items.push(s),
                Err(e) => {
                    self.errs.push(e);
                    self.sync_stmt();
                    if self.i == start {
                        self.i += 1;
                    }
                }
            }
        }
    }

    fn statement(&mut self) -> PResult<Stmt> {
        let pos = self.pos();
        if self.starts_type() {
            let specs = self.decl_specs()?;
            if self.eat_punct(";") {
                let decl = Declaration { specs, declarators: Vec::new(), pos };
                return Ok(Stmt { kind: StmtKind::Decl(decl), pos });
            }
            let first = self.declarator(false)?;
            let decl = self.rest_of_declaration(specs, first, pos)?;
            return Ok(Stmt { kind: StmtKind::Decl(decl), pos });
        }
        let kind = match self.peek() {
            Tok::Punct(";") => {
                self.advance();
                StmtKind::Empty
            }
            Tok::Punct("{") => StmtKind::Block(self.block()?),
            Tok::Kw(Kw::If) => {
                self.advance();
                self.expect("(")?;
                let cond = self.expression()?;
                self.expect(")")?;
                let then = Box::new(self.statement()?);
                let els = if self.is_kw(Kw::Else) {
                    self.advance();
                    Some(Box::new(self.statement()?))
                } else {
                    None
                };
                StmtKind::If(cond, then, els)
            }
            Tok::Kw(Kw::While) => {
                self.advance();
                self.expect("(")?;
                let cond = self.expression()?;
                self.expect(")")?;
                StmtKind::While(cond, Box::new(self.statement()?))
            }
            Tok::Kw(Kw::For) => {
                self.advance();
                self.expect("(")?;
                let init = if self.is_punct(";") { None } else { Some(self.expression()?) };
                self.expect(";")?;
                let cond = if self.is_punct(";") { None } else { Some(self.expression()?) };
                self.expect(";")?;
                let step = if self.is_punct(")") { None } else { Some(self.expression()?) };
                self.expect(")")?;
                StmtKind::For(init, cond, step, Box::new(self.statement()?))
            }
            Tok::Kw(Kw::Return) => {
                self.advance();
                let e = if self.is_punct(";") { None } else { Some(self.expression()?) };
                self.expect(";")?;
                StmtKind::Return(e)
            }
            Tok::Kw(Kw::Break) => {
                self.advance();
                self.expect(";")?;
                StmtKind::Break
            }
            Tok::Kw(Kw::Continue) => {
                self.advance();
                self.expect(";")?;
                StmtKind::Continue
            }
            _ => {
                let e = self.expression()?;
                self.expect(";")?;
                StmtKind::Expr(e)
            }
        };
        Ok(Stmt { kind, pos })
    }

    fn expression(&mut self) -> PResult<Expr> {
        self.assignment()
    }

    fn assignment(&mut self) -> PResult<Expr> {
        let lhs = self.conditional()?;
        if let Tok::Punct(p) = self.peek() {
            if let Some(op) = is_assign_op(p) {
                self.advance();
                let rhs = self.assignment()?;
                let pos = lhs.pos;
                return Ok(Expr { kind: ExprKind::Assign(op, Box::new(lhs), Box::new(rhs)), pos });
            }
        }
        Ok(lhs)
    }

    fn conditional(&mut self) -> PResult<Expr> {
        self.binary(1)
    }

    fn binary(&mut self, min_prec: u8) -> PResult<Expr> {
        let mut lhs = self.unary()?;
        while let Tok::Punct(p) = self.peek() {
            let Some((op, prec)) = binop_info(p) else { break };
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            let pos = lhs.pos;
            lhs = Expr { kind: ExprKind::Binary(op, Box::new(lhs), Box::new(rhs)), pos };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let op = match self.peek() {
            Tok::Punct("-") => Some(UnOp::Neg),
            Tok::Punct("+") => Some(UnOp::Plus),
            Tok::Punct("!") => Some(UnOp::LNot),
            Tok::Punct("~") => Some(UnOp::BitNot),
            Tok::Punct("*") => Some(UnOp::Deref),
            Tok::Punct("&") => Some(UnOp::Addr),
            Tok::Punct("++") => Some(UnOp::PreInc),
            Tok::Punct("--") => Some(UnOp::PreDec),
            _ => None,
        };
        if let Some(op) = op {
            self.advance();
            let e = self.unary()?;
            return Ok(Expr { kind: ExprKind::Unary(op, Box::new(e)), pos });
        }
        if self.is_kw(Kw::Sizeof) {
            self.advance();
            if self.is_punct("(") && self.type_follows_paren() {
                self.advance();
                let tn = self.type_name()?;
                self.expect(")")?;
                return Ok(Expr { kind: ExprKind::SizeofType(Box::new(tn)), pos });
            }
            let e = self.unary()?;
            return Ok(Expr { kind: ExprKind::SizeofExpr(Box::new(e)), pos });
        }
        if self.is_punct("(") && self.type_follows_paren() {
            self.advance();
            let tn = self.type_name()?;
            self.expect(")")?;
            let e = self.unary()?;
            return Ok(Expr { kind: ExprKind::Cast(Box::new(tn), Box::new(e)), pos });
        }
        self.postfix()
    }

    fn type_follows_paren(&self) -> bool {
        match self.peek_at(1) {
            Tok::Kw(k) => !matches!(k, Kw::Sizeof),
            Tok::Ident(s) => self.is_typedef_name(s),
            _ => false,
        }
    }

    fn postfix(&mut self) -> PResult<Expr> {
        let mut e = self.primary()?;
        loop {
            let pos = e.pos;
            if self.eat_punct("[") {
                let idx = self.expression()?;
                self.expect("]")?;
                e = Expr { kind: ExprKind::Index(Box::new(e), Box::new(idx)), pos };
            } else if self.eat_punct("(") {
                let mut args = Vec::new();
                if !self.is_punct(")") {
                    loop {
                        args.push(self.assignment()?);
                        if !self.eat_punct(",") {
                            break;
                        }
                    }
                }
                self.expect(")")?;
                e = Expr { kind: ExprKind::Call(Box::new(e), args), pos };
            } else if self.is_punct(".") || self.is_punct("->") {
                let arrow = self.is_punct("->");
                self.advance();
                let (name, _) = self.ident()?;
                e = Expr { kind: ExprKind::Member(Box::new(e), name, arrow), pos };
            } else if self.eat_punct("++") {
                e = Expr { kind: ExprKind::Unary(UnOp::PostInc, Box::new(e)), pos };
            } else if self.eat_punct("--") {
                e = Expr { kind: ExprKind::Unary(UnOp::PostDec, Box::new(e)), pos };
            } else {
                return Ok(e);
            }
        }
    }

    fn primary(&mut self) -> PResult<Expr> {
        let pos = self.pos();
        let kind = match self.peek().clone() {
            Tok::Int { value, unsigned } => ExprKind::Int { value, unsigned },
            Tok::Float { value, single } => ExprKind::Float { value, single },
            Tok::Char(c) => ExprKind::Char(c),
            Tok::Str(mut s) => {
                self.advance();
                // adjacent literals concatenate
                while let Tok::Str(more) = self.peek().clone() {
                    s.extend(more);
                    self.advance();
                }
                return Ok(Expr { kind: ExprKind::Str(s), pos });
            }
            Tok::Ident(name) => ExprKind::Ident(name),
            Tok::Punct("(") => {
                self.advance();
                let mut inner = self.expression()?;
                self.expect(")")?;
                // a parenthesized expression starts at its '('
                inner.pos = pos;
                return Ok(inner);
            }
            _ => return Err(self.unexpected("expression")),
        };
        self.advance();
        Ok(Expr { kind, pos })
    }
}
