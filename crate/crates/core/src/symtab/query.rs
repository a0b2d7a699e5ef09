use thiserror::Error;

use super::{Coordinate, SPoint, SymModule, Symbol, SymbolKind, Uid};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LookupError {
    #[error("uid {0} does not name a symbol in this module")]
    UnknownUid(Uid),
    #[error("uplink chain from uid {0} does not terminate")]
    Cycle(Uid),
}

/// The symbol `start` followed by its uplink ancestors, ending at uplink 0.
pub fn visible_chain(m: &SymModule, start: Uid) -> Result<Vec<&Symbol>, LookupError> {
    let first = m.symbol(start).ok_or(LookupError::UnknownUid(start))?;
    let mut chain = vec![first];
    let mut cur = first.uplink;
    while !cur.is_none() {
        if chain.len() > m.nuids as usize {
            return Err(LookupError::Cycle(start));
        }
        let sym = m.symbol(cur).ok_or(LookupError::UnknownUid(cur))?;
        chain.push(sym);
        cur = sym.uplink;
    }
    Ok(chain)
}

/// Resolve `name` as seen from `tail` in `module`: the visible chain wins,
/// then the globals chains (STATIC/GLOBAL only) of every other module.
///
/// A `tail` of 0 means nothing local is visible.
pub fn lookup_name<'a>(
    name: &str,
    module: &'a SymModule,
    tail: Uid,
    all_modules: &[&'a SymModule],
) -> Option<&'a Symbol> {
    if !tail.is_none() {
        if let Ok(chain) = visible_chain(module, tail) {
            if let Some(s) = chain.into_iter().find(|s| s.id == name) {
                return Some(s);
            }
        }
    }
    for other in all_modules {
        if other.uname == module.uname || other.globals.is_none() {
            continue;
        }
        let Ok(chain) = visible_chain(other, other.globals) else { continue };
        let found = chain.into_iter().find(|s| {
            s.id == name && matches!(s.kind, SymbolKind::Static { .. } | SymbolKind::Global { .. })
        });
        if found.is_some() {
            return found;
        }
    }
    None
}

/// All stopping points matching `pattern`, with their indices, in order.
pub fn find_spoints<'a>(m: &'a SymModule, pattern: &Coordinate) -> Vec<(usize, &'a SPoint)> {
    m.spoints.iter().enumerate().filter(|(_, sp)| pattern.matches(&sp.src)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symtab::{Item, TypeNode};

    fn sym(uid: u32, id: &str, kind: SymbolKind, uplink: u32) -> Item {
        Item::symbol(Symbol {
            kind,
            id: id.into(),
            uid: Uid(uid),
            module: 5,
            src: Coordinate::new("m.c", uid, 1),
            ty: Uid(1),
            uplink: Uid(uplink),
        })
    }

    fn two_level() -> SymModule {
        let mut m = SymModule::new("m.c", 5);
        m.items = vec![
            Item::ty(Uid(1), TypeNode::int(4, 4)),
            sym(2, "f", SymbolKind::Global { index: 1 }, 0),
            sym(3, "g", SymbolKind::Static { index: 0 }, 2),
            sym(4, "x", SymbolKind::Param { offset: 20 }, 3),
            sym(5, "g", SymbolKind::Local { offset: 24 }, 4),
        ];
        m.nuids = 5;
        m.globals = Uid(3);
        m
    }

    #[test]
    fn chain_follows_uplinks() {
        let m = two_level();
        let ids: Vec<_> = visible_chain(&m, Uid(5)).unwrap().iter().map(|s| s.uid.0).collect();
        assert_eq!(ids, [5, 4, 3, 2]);
        assert_eq!(visible_chain(&m, Uid(2)).unwrap().len(), 1);
        assert_eq!(visible_chain(&m, Uid(1)).unwrap_err(), LookupError::UnknownUid(Uid(1)));
        assert_eq!(visible_chain(&m, Uid(42)).unwrap_err(), LookupError::UnknownUid(Uid(42)));
    }

    #[test]
    fn inner_declaration_shadows_outer() {
        let m = two_level();
        let found = lookup_name("g", &m, Uid(5), &[&m]).unwrap();
        assert_eq!(found.uid, Uid(5));
        let found = lookup_name("g", &m, Uid(3), &[&m]).unwrap();
        assert_eq!(found.uid, Uid(3));
        assert!(lookup_name("nosuch", &m, Uid(5), &[&m]).is_none());
    }

    #[test]
    fn other_modules_expose_only_globals_chain() {
        let here = two_level();
        let mut there = two_level();
        there.uname = 6;
        for it in &mut there.items {
            if let crate::symtab::ItemKind::Symbol(s) = &mut it.kind {
                s.module = 6;
                s.id = format!("{}2", s.id);
            }
        }
        assert_eq!(lookup_name("g2", &here, Uid(5), &[&here, &there]).unwrap().module, 6);
        // locals of the other unit are never visible
        assert!(lookup_name("x2", &here, Uid(5), &[&here, &there]).is_none());
    }

    #[test]
    fn wildcard_spoint_search() {
        let mut m = SymModule::new("m.c", 1);
        for (y, x) in [(1, 1), (2, 3), (2, 9), (4, 1)] {
            m.spoints.push(SPoint { src: Coordinate::new("m.c", y, x), tail: Uid::NONE });
        }
        let idx = |pat: Coordinate| find_spoints(&m, &pat).iter().map(|(i, _)| *i).collect::<Vec<_>>();
        assert_eq!(idx(Coordinate::new("m.c", 2, 9)), [2]);
        assert_eq!(idx(Coordinate::new("", 2, 0)), [1, 2]);
        assert_eq!(idx(Coordinate::new("", 0, 0)), [0, 1, 2, 3]);
        assert_eq!(idx(Coordinate::new("other.c", 0, 0)), Vec::<usize>::new());
    }
}
