//! Checked construction of grammar values from a constructor name and a flat
//! argument list (constructor fields first, then attributes), mirroring the
//! generated constructor functions of a tree-description tool. Typed code
//! should use the `TypeNode` helpers directly; this entry point exists for
//! tools that build symbol tables from untyped input.

use std::collections::HashSet;

use thiserror::Error;

use super::{Coordinate, EnumItem, FieldRec, Symbol, SymbolKind, TypeKind, TypeNode, Uid};

#[derive(Debug, Clone, PartialEq)]
pub enum Arg {
    Int(i64),
    Ident(String),
    Enums(Vec<EnumItem>),
    Fields(Vec<FieldRec>),
    Uids(Vec<Uid>),
    Coord(Coordinate),
}

impl Arg {
    fn kind(&self) -> &'static str {
        match self {
            Arg::Int(_) => "int",
            Arg::Ident(_) => "identifier",
            Arg::Enums(_) => "enum*",
            Arg::Fields(_) => "field*",
            Arg::Uids(_) => "int*",
            Arg::Coord(_) => "coordinate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ConstructError {
    #[error("unknown constructor {0}")]
    UnknownConstructor(String),
    #[error("{ctor} takes {expected} arguments, got {got}")]
    Arity { ctor: String, expected: usize, got: usize },
    #[error("{ctor} argument {position}: expected {expected}, got {got}")]
    Kind { ctor: String, position: usize, expected: &'static str, got: &'static str },
    #[error("{ctor} argument {position}: {value} out of range")]
    Range { ctor: String, position: usize, value: i64 },
    #[error("{ctor}: {reason}")]
    Invariant { ctor: String, reason: String },
}

struct Args<'a> {
    ctor: &'a str,
    args: &'a [Arg],
    pos: usize,
}

impl<'a> Args<'a> {
    fn next(&mut self, expected: &'static str) -> Result<&'a Arg, ConstructError> {
        let a = &self.args[self.pos];
        self.pos += 1;
        if a.kind() != expected {
            return Err(ConstructError::Kind {
                ctor: self.ctor.into(),
                position: self.pos,
                expected,
                got: a.kind(),
            });
        }
        Ok(a)
    }

    fn int(&mut self) -> Result<i64, ConstructError> {
        match self.next("int")? {
            Arg::Int(v) => Ok(*v),
            _ => unreachable!(),
        }
    }

    fn u32(&mut self) -> Result<u32, ConstructError> {
        let v = self.int()?;
        u32::try_from(v).map_err(|_| ConstructError::Range {
            ctor: self.ctor.into(),
            position: self.pos,
            value: v,
        })
    }

    fn i32(&mut self) -> Result<i32, ConstructError> {
        let v = self.int()?;
        i32::try_from(v).map_err(|_| ConstructError::Range {
            ctor: self.ctor.into(),
            position: self.pos,
            value: v,
        })
    }

    fn uid(&mut self) -> Result<Uid, ConstructError> {
        self.u32().map(Uid)
    }

    fn ident(&mut self) -> Result<String, ConstructError> {
        match self.next("identifier")? {
            Arg::Ident(s) => Ok(s.clone()),
            _ => unreachable!(),
        }
    }
}

fn arity(ctor: &str, args: &[Arg], expected: usize) -> Result<(), ConstructError> {
    if args.len() != expected {
        return Err(ConstructError::Arity { ctor: ctor.into(), expected, got: args.len() });
    }
    Ok(())
}

/// Build a type from its constructor name, constructor fields, then `size`
/// and `align`.
pub fn construct_type(ctor: &str, args: &[Arg]) -> Result<TypeNode, ConstructError> {
    let nfields = match ctor {
        "INT" | "UNSIGNED" | "FLOAT" | "VOID" => 0,
        "POINTER" | "CONST" | "VOLATILE" => 1,
        "ENUM" | "STRUCT" | "UNION" | "ARRAY" | "FUNCTION" => 2,
        _ => return Err(ConstructError::UnknownConstructor(ctor.into())),
    };
    arity(ctor, args, nfields + 2)?;
    let mut a = Args { ctor, args, pos: 0 };
    let kind = match ctor {
        "INT" => TypeKind::Int,
        "UNSIGNED" => TypeKind::Unsigned,
        "FLOAT" => TypeKind::Float,
        "VOID" => TypeKind::Void,
        "POINTER" => TypeKind::Pointer { ty: a.uid()? },
        "CONST" => TypeKind::Const { ty: a.uid()? },
        "VOLATILE" => TypeKind::Volatile { ty: a.uid()? },
        "ENUM" => {
            let tag = a.ident()?;
            let Arg::Enums(ids) = a.next("enum*")? else { unreachable!() };
            TypeKind::Enum { tag, ids: ids.clone() }
        }
        "STRUCT" | "UNION" => {
            let tag = a.ident()?;
            let Arg::Fields(fields) = a.next("field*")? else { unreachable!() };
            if ctor == "STRUCT" {
                TypeKind::Struct { tag, fields: fields.clone() }
            } else {
                TypeKind::Union { tag, fields: fields.clone() }
            }
        }
        "ARRAY" => TypeKind::Array { ty: a.uid()?, nelems: a.u32()? },
        _ => {
            let ty = a.uid()?;
            let Arg::Uids(formals) = a.next("int*")? else { unreachable!() };
            TypeKind::Function { ty, formals: formals.clone() }
        }
    };
    let size = a.u32()?;
    let align = a.u32()?;
    let node = TypeNode { kind, size, align };
    check_local_invariants(ctor, &node)?;
    Ok(node)
}

fn check_local_invariants(ctor: &str, t: &TypeNode) -> Result<(), ConstructError> {
    let fail = |reason: &str| Err(ConstructError::Invariant { ctor: ctor.into(), reason: reason.into() });
    if t.align == 0 {
        return fail("align must be at least 1");
    }
    match &t.kind {
        TypeKind::Void if t.size != 0 => fail("VOID must have size 0"),
        TypeKind::Enum { ids, .. } => {
            let mut seen = HashSet::new();
            if ids.iter().all(|e| seen.insert(e.id.as_str())) {
                Ok(())
            } else {
                fail("enumeration identifiers must be unique")
            }
        }
        TypeKind::Struct { fields, .. } | TypeKind::Union { fields, .. } => {
            if ctor == "STRUCT" && !t.size.is_multiple_of(t.align) {
                return fail("STRUCT size must be a multiple of its alignment");
            }
            if fields.iter().any(|f| f.bitsize == 0 && f.lsb != 0) {
                return fail("a field with lsb must have a bitsize");
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Build a symbol from its constructor name, constructor fields, then the
/// attributes `id, uid, module, src, type, uplink`.
pub fn construct_symbol(ctor: &str, args: &[Arg]) -> Result<Symbol, ConstructError> {
    let nfields = match ctor {
        "TYPEDEF" => 0,
        "STATIC" | "GLOBAL" | "LOCAL" | "PARAM" | "ENUMCONST" => 1,
        _ => return Err(ConstructError::UnknownConstructor(ctor.into())),
    };
    arity(ctor, args, nfields + 6)?;
    let mut a = Args { ctor, args, pos: 0 };
    let kind = match ctor {
        "STATIC" => SymbolKind::Static { index: a.u32()? },
        "GLOBAL" => SymbolKind::Global { index: a.u32()? },
        "TYPEDEF" => SymbolKind::Typedef,
        "LOCAL" => SymbolKind::Local { offset: a.i32()? },
        "PARAM" => SymbolKind::Param { offset: a.i32()? },
        _ => SymbolKind::EnumConst { value: a.int()? },
    };
    let id = a.ident()?;
    let uid = a.uid()?;
    if uid.is_none() {
        return Err(ConstructError::Invariant { ctor: ctor.into(), reason: "uid 0 is reserved".into() });
    }
    let module = a.u32()?;
    let Arg::Coord(src) = a.next("coordinate")? else { unreachable!() };
    Ok(Symbol { kind, id, uid, module, src: src.clone(), ty: a.uid()?, uplink: a.uid()? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enum_color_matches_generated_constructor_call() {
        let t = construct_type(
            "ENUM",
            &[
                Arg::Ident("color".into()),
                Arg::Enums(vec![
                    EnumItem::new("RED", 1),
                    EnumItem::new("GREEN", 2),
                    EnumItem::new("BLUE", 3),
                ]),
                Arg::Int(4),
                Arg::Int(4),
            ],
        )
        .unwrap();
        assert_eq!(
            t,
            TypeNode::enumeration(
                4,
                4,
                "color",
                vec![EnumItem::new("RED", 1), EnumItem::new("GREEN", 2), EnumItem::new("BLUE", 3)]
            )
        );
    }

    #[test]
    fn basic_types() {
        let int = construct_type("INT", &[Arg::Int(4), Arg::Int(4)]).unwrap();
        assert_eq!(int, TypeNode::int(4, 4));
        let ch = construct_type("INT", &[Arg::Int(1), Arg::Int(1)]).unwrap();
        assert_eq!((ch.size, ch.align), (1, 1));
        assert_eq!(construct_type("VOID", &[Arg::Int(0), Arg::Int(1)]).unwrap(), TypeNode::void());
    }

    #[test]
    fn arity_and_kind_errors() {
        assert!(matches!(
            construct_type("POINTER", &[Arg::Int(4), Arg::Int(4)]),
            Err(ConstructError::Arity { expected: 3, got: 2, .. })
        ));
        assert!(matches!(
            construct_type("POINTER", &[Arg::Ident("x".into()), Arg::Int(4), Arg::Int(4)]),
            Err(ConstructError::Kind { position: 1, .. })
        ));
        assert!(matches!(construct_type("DOUBLE", &[]), Err(ConstructError::UnknownConstructor(_))));
        assert!(matches!(
            construct_type("VOID", &[Arg::Int(4), Arg::Int(1)]),
            Err(ConstructError::Invariant { .. })
        ));
        assert!(matches!(
            construct_type("INT", &[Arg::Int(-4), Arg::Int(4)]),
            Err(ConstructError::Range { .. })
        ));
    }

    #[test]
    fn symbol_construction() {
        let s = construct_symbol(
            "LOCAL",
            &[
                Arg::Int(24),
                Arg::Ident("c".into()),
                Arg::Int(9),
                Arg::Int(0x49499895),
                Arg::Coord(Coordinate::new("wf.c", 3, 9)),
                Arg::Int(1),
                Arg::Int(8),
            ],
        )
        .unwrap();
        assert_eq!(s.kind, SymbolKind::Local { offset: 24 });
        assert_eq!(s.uplink, Uid(8));
        assert!(matches!(
            construct_symbol("TYPEDEF", &[Arg::Int(1)]),
            Err(ConstructError::Arity { expected: 6, .. })
        ));
    }
}
