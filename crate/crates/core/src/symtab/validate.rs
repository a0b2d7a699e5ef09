use std::collections::{HashMap, HashSet};

use thiserror::Error;

use super::{ItemKind, SymModule, SymbolKind, TypeKind, TypeNode, Uid};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ValidationError {
    #[error("uid {0} appears more than once")]
    DuplicateUid(Uid),
    #[error("uid {uid} outside 1..={nuids}")]
    UidOutOfRange { uid: Uid, nuids: u32 },
    #[error("{referrer} refers to uid {uid}, which is not defined")]
    DanglingUid { referrer: String, uid: Uid },
    #[error("{referrer} refers to uid {uid}, which is not a {expected}")]
    WrongItemKind { referrer: String, uid: Uid, expected: &'static str },
    #[error("uplink chain starting at uid {0} does not terminate")]
    UplinkCycle(Uid),
    #[error("globals field {0} does not name a STATIC or GLOBAL symbol")]
    BadGlobals(Uid),
    #[error("{0} has a wildcard or zero coordinate")]
    BadCoordinate(String),
    #[error("symbol uid {uid} belongs to unit {found:#x}, expected {expected:#x}")]
    ForeignSymbol { uid: Uid, found: u32, expected: u32 },
    #[error("address index {index} of uid {uid} is duplicated or out of range")]
    BadIndex { uid: Uid, index: u32 },
    #[error("type uid {uid}: {reason}")]
    TypeInvariant { uid: Uid, reason: String },
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Symbol,
    Type,
}

pub(super) fn validate(m: &SymModule) -> Result<(), ValidationError> {
    let mut kinds: HashMap<Uid, Kind> = HashMap::with_capacity(m.items.len());
    for item in &m.items {
        if item.uid.is_none() || item.uid.0 > m.nuids {
            return Err(ValidationError::UidOutOfRange { uid: item.uid, nuids: m.nuids });
        }
        let kind = match item.kind {
            ItemKind::Symbol(ref s) => {
                if s.uid != item.uid {
                    return Err(ValidationError::WrongItemKind {
                        referrer: format!("item {}", item.uid),
                        uid: s.uid,
                        expected: "matching symbol uid",
                    });
                }
                Kind::Symbol
            }
            ItemKind::Type(_) => Kind::Type,
        };
        if kinds.insert(item.uid, kind).is_some() {
            return Err(ValidationError::DuplicateUid(item.uid));
        }
    }

    let expect = |referrer: &dyn Fn() -> String, uid: Uid, want: Kind| -> Result<(), ValidationError> {
        match kinds.get(&uid) {
            None => Err(ValidationError::DanglingUid { referrer: referrer(), uid }),
            Some(k) if *k != want => Err(ValidationError::WrongItemKind {
                referrer: referrer(),
                uid,
                expected: if want == Kind::Type { "type" } else { "symbol" },
            }),
            Some(_) => Ok(()),
        }
    };

    let mut address_slots = Vec::new();
    for item in &m.items {
        match &item.kind {
            ItemKind::Symbol(s) => {
                let who = || format!("symbol {} (uid {})", s.id, s.uid);
                if s.module != m.uname {
                    return Err(ValidationError::ForeignSymbol {
                        uid: s.uid,
                        found: s.module,
                        expected: m.uname,
                    });
                }
                if !s.src.is_real() {
                    return Err(ValidationError::BadCoordinate(who()));
                }
                expect(&who, s.ty, Kind::Type)?;
                if !s.uplink.is_none() {
                    expect(&who, s.uplink, Kind::Symbol)?;
                }
                if let Some(index) = s.kind.address_index() {
                    address_slots.push((s.uid, index));
                }
            }
            ItemKind::Type(t) => {
                let who = || format!("type {} (uid {})", t.kind.name(), item.uid);
                for r in t.kind.referenced_uids() {
                    expect(&who, r, Kind::Type)?;
                }
                check_type(m, item.uid, t)?;
            }
        }
    }

    let mut seen = vec![false; address_slots.len()];
    for (uid, index) in address_slots {
        match seen.get_mut(index as usize) {
            Some(slot) if !*slot => *slot = true,
            _ => return Err(ValidationError::BadIndex { uid, index }),
        }
    }

    if !m.globals.is_none() {
        match m.symbol(m.globals) {
            Some(s) if matches!(s.kind, SymbolKind::Static { .. } | SymbolKind::Global { .. }) => {}
            _ => return Err(ValidationError::BadGlobals(m.globals)),
        }
    }

    for (i, sp) in m.spoints.iter().enumerate() {
        let who = || format!("stopping point {i}");
        if !sp.src.is_real() {
            return Err(ValidationError::BadCoordinate(who()));
        }
        if !sp.tail.is_none() {
            expect(&who, sp.tail, Kind::Symbol)?;
        }
    }

    check_acyclic(m)
}

fn check_type(m: &SymModule, uid: Uid, t: &TypeNode) -> Result<(), ValidationError> {
    let bad = |reason: String| Err(ValidationError::TypeInvariant { uid, reason });
    if t.align == 0 {
        return bad("align must be at least 1".into());
    }
    match &t.kind {
        TypeKind::Void if t.size != 0 => bad(format!("VOID has size {}", t.size)),
        TypeKind::Array { ty, nelems } => {
            let elem = m.type_node(*ty).map_or(0, |e| e.size);
            if u64::from(*nelems) * u64::from(elem) != u64::from(t.size) {
                return bad(format!("ARRAY size {} != {} x {}", t.size, nelems, elem));
            }
            Ok(())
        }
        TypeKind::Enum { ids, .. } => {
            let mut names = HashSet::new();
            for e in ids {
                if !names.insert(e.id.as_str()) {
                    return bad(format!("enumeration constant {} repeated", e.id));
                }
            }
            Ok(())
        }
        TypeKind::Struct { fields, .. } | TypeKind::Union { fields, .. } => {
            if matches!(t.kind, TypeKind::Struct { .. }) && !t.size.is_multiple_of(t.align) {
                return bad(format!("STRUCT size {} not a multiple of align {}", t.size, t.align));
            }
            for f in fields {
                let storage = m.type_node(f.ty).map_or(0, |ft| ft.size);
                if f.bitsize == 0 {
                    if f.lsb != 0 {
                        return bad(format!("field {} has lsb without bitsize", f.id));
                    }
                } else if f.lsb + f.bitsize > storage * 8 {
                    return bad(format!("bit field {} overflows its storage unit", f.id));
                }
                if u64::from(f.offset) + u64::from(storage) > u64::from(t.size) {
                    return bad(format!("field {} extends past the end of the type", f.id));
                }
            }
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Every uplink chain must reach uid 0. Memoized so the whole check is linear.
fn check_acyclic(m: &SymModule) -> Result<(), ValidationError> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        Active,
        Done,
    }
    let mut marks: HashMap<Uid, Mark> = m.symbols().map(|s| (s.uid, Mark::Fresh)).collect();
    for start in m.symbols() {
        if marks[&start.uid] == Mark::Done {
            continue;
        }
        let mut path = Vec::new();
        let mut cur = start.uid;
        loop {
            match marks.get(&cur).copied() {
                None | Some(Mark::Done) => break,
                Some(Mark::Active) => return Err(ValidationError::UplinkCycle(start.uid)),
                Some(Mark::Fresh) => {
                    marks.insert(cur, Mark::Active);
                    path.push(cur);
                    // uplinks were checked to resolve to symbols above
                    cur = m.symbol(cur).map_or(Uid::NONE, |s| s.uplink);
                    if cur.is_none() {
                        break;
                    }
                }
            }
        }
        for uid in path {
            marks.insert(uid, Mark::Done);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symtab::{Coordinate, FieldRec, Item, SPoint, Symbol};

    fn base() -> SymModule {
        let mut m = SymModule::new("t.c", 7);
        m.items.push(Item::ty(Uid(1), TypeNode::int(4, 4)));
        m.items.push(Item::symbol(Symbol {
            kind: SymbolKind::Global { index: 0 },
            id: "g".into(),
            uid: Uid(2),
            module: 7,
            src: Coordinate::new("t.c", 1, 5),
            ty: Uid(1),
            uplink: Uid::NONE,
        }));
        m.nuids = 2;
        m.globals = Uid(2);
        m
    }

    #[test]
    fn accepts_minimal_module() {
        base().validate().unwrap();
        SymModule::new("e.c", 1).validate().unwrap();
    }

    #[test]
    fn rejects_dangling_uplink() {
        let mut m = base();
        if let ItemKind::Symbol(s) = &mut m.items[1].kind {
            s.uplink = Uid(9);
        }
        assert!(matches!(m.validate(), Err(ValidationError::DanglingUid { uid: Uid(9), .. })));
    }

    #[test]
    fn rejects_self_cycle() {
        let mut m = base();
        if let ItemKind::Symbol(s) = &mut m.items[1].kind {
            s.uplink = Uid(2);
        }
        assert_eq!(m.validate(), Err(ValidationError::UplinkCycle(Uid(2))));
    }

    #[test]
    fn rejects_globals_pointing_at_type() {
        let mut m = base();
        m.globals = Uid(1);
        assert_eq!(m.validate(), Err(ValidationError::BadGlobals(Uid(1))));
    }

    #[test]
    fn rejects_wildcard_spoint() {
        let mut m = base();
        m.spoints.push(SPoint { src: Coordinate::new("t.c", 0, 1), tail: Uid::NONE });
        assert!(matches!(m.validate(), Err(ValidationError::BadCoordinate(_))));
    }

    #[test]
    fn rejects_bad_struct_layout() {
        let mut m = base();
        m.items.push(Item::ty(
            Uid(3),
            TypeNode::structure(
                4,
                4,
                "s",
                vec![FieldRec { id: "a".into(), ty: Uid(1), offset: 2, bitsize: 0, lsb: 0 }],
            ),
        ));
        m.nuids = 3;
        assert!(matches!(m.validate(), Err(ValidationError::TypeInvariant { uid: Uid(3), .. })));
    }

    #[test]
    fn rejects_duplicate_address_index() {
        let mut m = base();
        let mut dup = m.items[1].clone();
        dup.uid = Uid(3);
        if let ItemKind::Symbol(s) = &mut dup.kind {
            s.uid = Uid(3);
            s.id = "h".into();
        }
        m.items.push(dup);
        m.nuids = 3;
        assert!(matches!(m.validate(), Err(ValidationError::BadIndex { .. })));
    }
}
