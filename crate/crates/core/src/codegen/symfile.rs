//! Builds a unit's symbol table from the typed tree and its stop plan.

use std::collections::HashMap;

use crate::minic::check::{SymClass, SymId, TypedUnit, Uplink};
use crate::minic::types::{CType, TypeId};
use crate::minic::StopPlan;
use crate::symtab::{Coordinate, EnumItem, FieldRec, Item, SPoint, SymModule, Symbol, SymbolKind, TypeNode, Uid};

/// How the unit's symbols map into the symbol table.
#[derive(Debug, Clone, Default)]
pub struct UidMap {
    pub syms: HashMap<SymId, Uid>,
    /// Symbols in address-vector order.
    pub address_vector: Vec<SymId>,
}

struct Emitter<'a> {
    unit: &'a TypedUnit,
    next: u32,
    type_uids: HashMap<TypeId, Uid>,
    types: Vec<(Uid, TypeNode)>,
}

impl Emitter<'_> {
    fn fresh(&mut self) -> Uid {
        self.next += 1;
        Uid(self.next)
    }

    fn ty(&mut self, id: TypeId) -> Uid {
        if let Some(u) = self.type_uids.get(&id) {
            return *u;
        }
        let uid = self.fresh();
        self.type_uids.insert(id, uid);
        let t = &self.unit.types;
        let (size, align) = (t.size(id), t.align(id));
        let node = match t.get(id).clone() {
            CType::Void => TypeNode::void(),
            CType::Int { signed: true, .. } => TypeNode::int(size, align),
            CType::Int { .. } => TypeNode::unsigned(size, align),
            CType::Float { .. } => TypeNode::float(size, align),
            CType::Pointer(p) => TypeNode::pointer(self.ty(p)),
            CType::Array(e, n) => {
                let esz = t.size(e);
                TypeNode::array(self.ty(e), n, esz, align)
            }
            CType::Function { ret, params } => {
                let ret = self.ty(ret);
                let formals = params.iter().map(|p| self.ty(*p)).collect();
                TypeNode::function(ret, formals)
            }
            CType::Record(r) => {
                let rec = self.unit.types.records[r as usize].clone();
                let fields = rec
                    .fields
                    .iter()
                    .filter(|f| !f.name.is_empty())
                    .map(|f| FieldRec {
                        id: f.name.clone(),
                        ty: self.ty(f.ty),
                        offset: f.offset,
                        bitsize: f.bitsize as u32,
                        lsb: f.lsb as u32,
                    })
                    .collect();
                let tag = rec.tag.clone().unwrap_or_default();
                if rec.is_union {
                    TypeNode::union(size, align, tag, fields)
                } else {
                    TypeNode::structure(size, align, tag, fields)
                }
            }
            CType::Enum(e) => {
                let def = &self.unit.types.enums[e as usize];
                let ids = def.items.iter().map(|(n, v)| EnumItem::new(n.clone(), *v)).collect();
                TypeNode::enumeration(size, align, def.tag.clone().unwrap_or_default(), ids)
            }
            CType::Const(b) => TypeNode { kind: crate::symtab::TypeKind::Const { ty: self.ty(b) }, size, align },
            CType::Volatile(b) => TypeNode { kind: crate::symtab::TypeKind::Volatile { ty: self.ty(b) }, size, align },
        };
        self.types.push((uid, node));
        uid
    }
}

/// Emit the unit's symbol table.
///
/// Uids go first to file-scope symbols in chain order, then to each
/// function's locals, then to types as they are first referenced. Address
/// indices count STATIC/GLOBAL symbols walking back from the chain's tail,
/// then local statics in declaration order.
pub fn emit_symfile(unit: &TypedUnit, plan: &StopPlan, uname: u32) -> (SymModule, UidMap) {
    let mut e = Emitter { unit, next: 0, type_uids: HashMap::new(), types: Vec::new() };
    let mut map = UidMap::default();
    let chain = unit.file_scope_chain();
    let mut order: Vec<SymId> = chain.clone();
    for f in &unit.funcs {
        order.extend(f.locals.iter().copied());
    }
    for id in &order {
        let uid = e.fresh();
        map.syms.insert(*id, uid);
    }
    let file_tail = chain.last().map_or(Uid::NONE, |id| map.syms[id]);

    let is_addressed = |id: &SymId| matches!(unit.sym(*id).class, SymClass::Function { .. } | SymClass::Object { .. });
    map.address_vector = chain.iter().rev().filter(|id| is_addressed(id)).copied().collect();
    let globals = map.address_vector.first().map_or(Uid::NONE, |id| map.syms[id]);
    for f in &unit.funcs {
        map.address_vector.extend(f.locals.iter().filter(|id| is_addressed(id)));
    }
    let index_of: HashMap<SymId, u32> = map.address_vector.iter().enumerate().map(|(i, id)| (*id, i as u32)).collect();

    let resolve = |up: Uplink, map: &UidMap| match up {
        Uplink::None => Uid::NONE,
        Uplink::Sym(s) => map.syms[&s],
        Uplink::FileScope => file_tail,
    };

    let mut items = Vec::new();
    for (pos, id) in order.iter().enumerate() {
        let s = unit.sym(*id);
        let kind = match s.class {
            SymClass::Function { external, .. } | SymClass::Object { external, .. } => {
                let index = index_of[id];
                if external {
                    SymbolKind::Global { index }
                } else {
                    SymbolKind::Static { index }
                }
            }
            SymClass::Local { offset } => SymbolKind::Local { offset: offset as i32 },
            SymClass::Param { offset } => SymbolKind::Param { offset: offset as i32 },
            SymClass::Typedef => SymbolKind::Typedef,
            SymClass::EnumConst(v) => SymbolKind::EnumConst { value: v },
        };
        let uplink = if s.file_scope {
            if pos == 0 { Uid::NONE } else { map.syms[&chain[pos - 1]] }
        } else {
            resolve(s.uplink, &map)
        };
        let ty = e.ty(s.ty);
        items.push(Item::symbol(Symbol {
            kind,
            id: s.name.clone(),
            uid: map.syms[id],
            module: uname,
            src: Coordinate::new(unit.file.clone(), s.pos.y, s.pos.x),
            ty,
            uplink,
        }));
    }
    items.extend(e.types.drain(..).map(|(uid, node)| Item::ty(uid, node)));
    items.sort_by_key(|it| it.uid);

    let spoints = plan
        .iter()
        .map(|p| SPoint { src: Coordinate::new(unit.file.clone(), p.src.y, p.src.x), tail: resolve(p.tail, &map) })
        .collect();
    let module = SymModule { file: unit.file.clone(), uname, nuids: e.next, items, globals, spoints };
    (module, map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minic::frontend;
    use crate::symtab::{visible_chain, ItemKind, TypeKind};

    fn emit(src: &str) -> (SymModule, UidMap) {
        let (u, p) = frontend(src, "t.c").unwrap_or_else(|e| panic!("{e:?}"));
        let (m, map) = emit_symfile(&u, &p, 7);
        m.validate().unwrap_or_else(|e| panic!("{e}"));
        (m, map)
    }

    #[test]
    fn pointer_types_are_shared() {
        let (m, _) = emit("char *a; char *b; int f(char *p) { char *q; return 0; }");
        let ptrs = m.items.iter().filter(|i| matches!(&i.kind, ItemKind::Type(t) if matches!(t.kind, TypeKind::Pointer { .. }))).count();
        assert_eq!(ptrs, 1);
    }

    #[test]
    fn recursive_struct() {
        let (m, _) = emit("struct node { int v; struct node *next; } *head;");
        assert!(m.symbols().any(|s| s.id == "head"));
    }

    #[test]
    fn local_statics_follow_file_scope_indices() {
        let (m, map) = emit("int g; int f(void) { static int n; return n; } static int h;");
        let idx = |name: &str| m.symbols().find(|s| s.id == name).unwrap().kind.address_index().unwrap();
        assert_eq!((idx("h"), idx("g"), idx("f"), idx("n")), (0, 1, 2, 3));
        assert_eq!(map.address_vector.len(), 4);
        let chain: Vec<_> = visible_chain(&m, m.globals).unwrap().iter().map(|s| s.id.clone()).collect();
        assert_eq!(chain, ["h", "g", "f"]);
    }

    #[test]
    fn empty_unit() {
        let (m, map) = emit("");
        assert_eq!((m.nuids, m.globals, m.items.len(), m.spoints.len()), (0, Uid::NONE, 0, 0));
        assert!(map.address_vector.is_empty());
    }
}
