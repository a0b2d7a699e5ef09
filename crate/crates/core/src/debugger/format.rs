//! Type-directed rendering of raw target bytes.

use thiserror::Error;

use crate::symtab::{FieldRec, SymModule, TypeKind, TypeNode, Uid};
use crate::vm::extract_bits;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("cannot display a void value")]
    Void,
    #[error("expected {expected} bytes, got {got}")]
    Size { expected: u32, got: usize },
    #[error("unknown type {0}")]
    UnknownType(Uid),
    #[error("unsupported {0}-byte {1}")]
    Width(u32, &'static str),
}

fn le(bytes: &[u8]) -> u64 {
    let mut b = [0u8; 8];
    b[..bytes.len().min(8)].copy_from_slice(&bytes[..bytes.len().min(8)]);
    u64::from_le_bytes(b)
}

fn signed(bytes: &[u8]) -> Result<i64, FormatError> {
    Ok(match bytes.len() {
        1 => bytes[0] as i8 as i64,
        2 => i16::from_le_bytes([bytes[0], bytes[1]]) as i64,
        4 => i32::from_le_bytes(bytes.try_into().unwrap()) as i64,
        8 => i64::from_le_bytes(bytes.try_into().unwrap()),
        n => return Err(FormatError::Width(n as u32, "integer")),
    })
}

fn unsigned(bytes: &[u8]) -> Result<u64, FormatError> {
    match bytes.len() {
        1 | 2 | 4 | 8 => Ok(le(bytes)),
        n => Err(FormatError::Width(n as u32, "integer")),
    }
}

fn node(m: &SymModule, ty: Uid) -> Result<&TypeNode, FormatError> {
    m.type_node(ty).ok_or(FormatError::UnknownType(ty))
}

/// True for 1-byte integer element types.
fn is_char(m: &SymModule, ty: Uid) -> bool {
    matches!(m.unqualified(ty), Some((_, t)) if matches!(t.kind, TypeKind::Int | TypeKind::Unsigned) && t.size == 1)
}

fn quoted(bytes: &[u8]) -> String {
    let end = bytes.iter().position(|&b| b == 0).unwrap_or(bytes.len());
    let mut s = String::from("\"");
    for &b in &bytes[..end] {
        match b {
            b'"' => s.push_str("\\\""),
            b'\\' => s.push_str("\\\\"),
            b'\n' => s.push_str("\\n"),
            b'\t' => s.push_str("\\t"),
            0x20..=0x7e => s.push(b as char),
            _ => s.push_str(&format!("\\x{b:02x}")),
        }
    }
    s.push('"');
    s
}

fn enum_text(t: &TypeNode, v: i64) -> String {
    if let TypeKind::Enum { ids, .. } = &t.kind {
        if let Some(e) = ids.iter().find(|e| e.value == v) {
            return e.id.clone();
        }
    }
    v.to_string()
}

fn field(m: &SymModule, f: &FieldRec, bytes: &[u8]) -> Result<String, FormatError> {
    if f.bitsize == 0 {
        let size = node(m, f.ty)?.size as usize;
        let at = f.offset as usize;
        let end = (at + size).min(bytes.len());
        return format_value(m, f.ty, &bytes[at.min(end)..end]);
    }
    let at = f.offset as usize;
    let unit = le(&bytes[at..(at + 4).min(bytes.len())]) as u32;
    let (_, t) = m.unqualified(f.ty).ok_or(FormatError::UnknownType(f.ty))?;
    let is_signed = !matches!(t.kind, TypeKind::Unsigned);
    let v = extract_bits(unit, f.lsb as u8, f.bitsize as u8, is_signed);
    Ok(match t.kind {
        TypeKind::Enum { .. } => enum_text(t, v as i32 as i64),
        _ if is_signed => (v as i32).to_string(),
        _ => v.to_string(),
    })
}

/// Render `bytes` as a value of type `ty` from module `m`.
pub fn format_value(m: &SymModule, ty: Uid, bytes: &[u8]) -> Result<String, FormatError> {
    let t = node(m, ty)?;
    if matches!(t.kind, TypeKind::Void) {
        return Err(FormatError::Void);
    }
    if bytes.len() != t.size as usize && !matches!(t.kind, TypeKind::Function { .. }) {
        return Err(FormatError::Size { expected: t.size, got: bytes.len() });
    }
    Ok(match &t.kind {
        TypeKind::Int => signed(bytes)?.to_string(),
        TypeKind::Unsigned => unsigned(bytes)?.to_string(),
        TypeKind::Float => match bytes.len() {
            4 => format!("{:?}", f32::from_le_bytes(bytes.try_into().unwrap())),
            8 => format!("{:?}", f64::from_le_bytes(bytes.try_into().unwrap())),
            n => return Err(FormatError::Width(n as u32, "float")),
        },
        TypeKind::Void => unreachable!(),
        TypeKind::Pointer { .. } | TypeKind::Function { .. } => format!("{:#x}", le(bytes)),
        TypeKind::Enum { .. } => enum_text(t, signed(bytes)?),
        TypeKind::Struct { fields, .. } | TypeKind::Union { fields, .. } => {
            let parts = fields
                .iter()
                .map(|f| Ok(format!("{} = {}", f.id, field(m, f, bytes)?)))
                .collect::<Result<Vec<_>, FormatError>>()?;
            format!("{{{}}}", parts.join(", "))
        }
        TypeKind::Array { ty: elem, nelems } => {
            let n = *nelems as usize;
            let esize = bytes.len().checked_div(n).unwrap_or(0);
            let parts = (0..n)
                .map(|i| format_value(m, *elem, &bytes[i * esize..(i + 1) * esize]))
                .collect::<Result<Vec<_>, _>>()?;
            let list = format!("{{{}}}", parts.join(", "));
            if is_char(m, *elem) {
                format!("{} {list}", quoted(bytes))
            } else {
                list
            }
        }
        TypeKind::Const { ty } | TypeKind::Volatile { ty } => format_value(m, *ty, bytes)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symtab::{EnumItem, Item};

    fn module(types: Vec<TypeNode>) -> SymModule {
        let mut m = SymModule::new("t.c", 1);
        for (i, t) in types.into_iter().enumerate() {
            m.items.push(Item::ty(Uid(i as u32 + 1), t));
        }
        m.nuids = m.items.len() as u32;
        m
    }

    #[test]
    fn enum_prints_name() {
        let color = TypeNode::enumeration(
            4,
            4,
            "color",
            vec![EnumItem::new("RED", 1), EnumItem::new("GREEN", 2), EnumItem::new("BLUE", 3)],
        );
        let m = module(vec![color]);
        assert_eq!(format_value(&m, Uid(1), &[2, 0, 0, 0]).unwrap(), "GREEN");
        assert_eq!(format_value(&m, Uid(1), &[9, 0, 0, 0]).unwrap(), "9");
    }

    #[test]
    fn bitfield_mask_shift() {
        let field = FieldRec { id: "f".into(), ty: Uid(1), offset: 0, bitsize: 3, lsb: 2 };
        let m = module(vec![TypeNode::unsigned(4, 4), TypeNode::structure(4, 4, "s", vec![field])]);
        for v in 0..=255u8 {
            let got = format_value(&m, Uid(2), &[v, 0, 0, 0]).unwrap();
            assert_eq!(got, format!("{{f = {}}}", (v >> 2) & 7));
        }
    }

    #[test]
    fn scalars_and_arrays() {
        let m = module(vec![
            TypeNode::int(1, 1),
            TypeNode::array(Uid(1), 4, 1, 1),
            TypeNode::float(8, 8),
            TypeNode::unsigned(2, 2),
            TypeNode::void(),
        ]);
        assert_eq!(format_value(&m, Uid(1), &[0xff]).unwrap(), "-1");
        assert_eq!(format_value(&m, Uid(2), b"hi\0\0").unwrap(), "\"hi\" {104, 105, 0, 0}");
        assert_eq!(format_value(&m, Uid(3), &2.5f64.to_le_bytes()).unwrap(), "2.5");
        assert_eq!(format_value(&m, Uid(4), &[0xff, 0xff]).unwrap(), "65535");
        assert_eq!(format_value(&m, Uid(5), &[]), Err(FormatError::Void));
        assert_eq!(format_value(&m, Uid(4), &[1]), Err(FormatError::Size { expected: 2, got: 1 }));
    }

    #[test]
    fn nested_struct_with_pointer() {
        let inner = TypeNode::structure(
            8,
            4,
            "point",
            vec![
                FieldRec { id: "x".into(), ty: Uid(1), offset: 0, bitsize: 0, lsb: 0 },
                FieldRec { id: "y".into(), ty: Uid(1), offset: 4, bitsize: 0, lsb: 0 },
            ],
        );
        let outer = TypeNode::structure(
            12,
            4,
            "seg",
            vec![
                FieldRec { id: "p".into(), ty: Uid(2), offset: 0, bitsize: 0, lsb: 0 },
                FieldRec { id: "next".into(), ty: Uid(4), offset: 8, bitsize: 0, lsb: 0 },
            ],
        );
        let m = module(vec![TypeNode::int(4, 4), inner, outer, TypeNode::pointer(Uid(3))]);
        let mut bytes = Vec::new();
        bytes.extend(3i32.to_le_bytes());
        bytes.extend((-4i32).to_le_bytes());
        bytes.extend(0x1040u32.to_le_bytes());
        assert_eq!(format_value(&m, Uid(3), &bytes).unwrap(), "{p = {x = 3, y = -4}, next = 0x1040}");
    }
}
