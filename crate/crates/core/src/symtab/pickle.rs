//! Binary pickle format for [`SymModule`].
//!
//! Layout: the 8-byte magic `SYMPKL1\0`, then the `module` product in field
//! order. Unsigned integers are LEB128, signed integers (enum values, frame
//! offsets) are zigzag LEB128, identifiers are a length-prefixed UTF-8 string,
//! sequences are a count followed by the elements, and sum types are a 1-based
//! constructor tag followed by constructor fields and then attributes. The
//! module is followed by a CRC-32 of every preceding byte (4 bytes,
//! little-endian) and then end of file.

use std::io::{self, Read, Write};

use thiserror::Error;

use super::{
    Coordinate, EnumItem, FieldRec, Item, ItemKind, SPoint, SymModule, Symbol, SymbolKind,
    TypeKind, TypeNode, Uid, ValidationError,
};

pub const MAGIC: &[u8; 8] = b"SYMPKL1\0";

#[derive(Debug, Error)]
pub enum PickleError {
    #[error("not a symbol pickle (bad magic)")]
    BadMagic,
    #[error("pickle truncated at byte {0}")]
    Truncated(usize),
    #[error("malformed pickle at byte {at}: {what}")]
    Malformed { at: usize, what: String },
    #[error("{0} trailing bytes after the pickle")]
    TrailingBytes(usize),
    #[error("checksum mismatch (stored {stored:#010x}, computed {computed:#010x})")]
    Checksum { stored: u32, computed: u32 },
    #[error("invalid symbol table: {0}")]
    Invalid(#[from] ValidationError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Byte categories used by the size report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PickleCategory {
    /// Magic, module header fields, sequence counts of the module, checksum.
    Module,
    /// Identifiers and file names.
    Identifiers,
    Symbols,
    Types,
    /// Coordinates (excluding their file names) and stopping-point tails.
    Coordinates,
}

/// Byte counts per [`PickleCategory`] for one pickle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PickleAccount {
    pub module: usize,
    pub identifiers: usize,
    pub symbols: usize,
    pub types: usize,
    pub coordinates: usize,
}

impl PickleAccount {
    pub fn total(&self) -> usize {
        self.module + self.identifiers + self.symbols + self.types + self.coordinates
    }

    fn slot(&mut self, cat: PickleCategory) -> &mut usize {
        match cat {
            PickleCategory::Module => &mut self.module,
            PickleCategory::Identifiers => &mut self.identifiers,
            PickleCategory::Symbols => &mut self.symbols,
            PickleCategory::Types => &mut self.types,
            PickleCategory::Coordinates => &mut self.coordinates,
        }
    }
}

struct Encoder {
    buf: Vec<u8>,
    cat: PickleCategory,
    account: PickleAccount,
}

impl Encoder {
    fn new() -> Self {
        Encoder { buf: Vec::new(), cat: PickleCategory::Module, account: PickleAccount::default() }
    }

    fn bytes(&mut self, b: &[u8]) {
        self.buf.extend_from_slice(b);
        *self.account.slot(self.cat) += b.len();
    }

    fn in_cat(&mut self, cat: PickleCategory, f: impl FnOnce(&mut Self)) {
        let saved = std::mem::replace(&mut self.cat, cat);
        f(self);
        self.cat = saved;
    }

    fn uint(&mut self, mut v: u64) {
        let mut tmp = [0u8; 10];
        let mut n = 0;
        loop {
            let byte = (v & 0x7f) as u8;
            v >>= 7;
            if v == 0 {
                tmp[n] = byte;
                n += 1;
                break;
            }
            tmp[n] = byte | 0x80;
            n += 1;
        }
        self.bytes(&tmp[..n]);
    }

    fn sint(&mut self, v: i64) {
        self.uint(((v << 1) ^ (v >> 63)) as u64);
    }

    fn uid(&mut self, u: Uid) {
        self.uint(u.0.into());
    }

    fn ident(&mut self, s: &str) {
        self.in_cat(PickleCategory::Identifiers, |e| {
            e.uint(s.len() as u64);
            e.bytes(s.as_bytes());
        });
    }

    fn coordinate(&mut self, c: &Coordinate) {
        self.ident(&c.file);
        self.in_cat(PickleCategory::Coordinates, |e| {
            e.uint(c.x.into());
            e.uint(c.y.into());
        });
    }

    fn module(&mut self, m: &SymModule) {
        self.bytes(MAGIC);
        // the unit's own name is module overhead, not a program identifier
        self.uint(m.file.len() as u64);
        self.bytes(m.file.as_bytes());
        self.uint(m.uname.into());
        self.uint(m.nuids.into());
        self.uint(m.items.len() as u64);
        for item in &m.items {
            self.item(item);
        }
        self.uid(m.globals);
        self.uint(m.spoints.len() as u64);
        for sp in &m.spoints {
            self.coordinate(&sp.src);
            self.in_cat(PickleCategory::Coordinates, |e| e.uid(sp.tail));
        }
        let crc = crc32fast::hash(&self.buf);
        self.bytes(&crc.to_le_bytes());
    }

    fn item(&mut self, item: &Item) {
        match &item.kind {
            ItemKind::Symbol(s) => self.in_cat(PickleCategory::Symbols, |e| {
                e.uint(1);
                e.symbol(s);
                e.uid(item.uid);
            }),
            ItemKind::Type(t) => self.in_cat(PickleCategory::Types, |e| {
                e.uint(2);
                e.type_node(t);
                e.uid(item.uid);
            }),
        }
    }

    fn symbol(&mut self, s: &Symbol) {
        self.uint(s.kind.tag().into());
        match s.kind {
            SymbolKind::Static { index } | SymbolKind::Global { index } => self.uint(index.into()),
            SymbolKind::Typedef => {}
            SymbolKind::Local { offset } | SymbolKind::Param { offset } => self.sint(offset.into()),
            SymbolKind::EnumConst { value } => self.sint(value),
        }
        self.ident(&s.id);
        self.uid(s.uid);
        self.uint(s.module.into());
        self.coordinate(&s.src);
        self.uid(s.ty);
        self.uid(s.uplink);
    }

    fn fields(&mut self, fields: &[FieldRec]) {
        self.uint(fields.len() as u64);
        for f in fields {
            self.ident(&f.id);
            self.uid(f.ty);
            self.uint(f.offset.into());
            self.uint(f.bitsize.into());
            self.uint(f.lsb.into());
        }
    }

    fn type_node(&mut self, t: &TypeNode) {
        self.uint(t.kind.tag().into());
        match &t.kind {
            TypeKind::Int | TypeKind::Unsigned | TypeKind::Float | TypeKind::Void => {}
            TypeKind::Pointer { ty } | TypeKind::Const { ty } | TypeKind::Volatile { ty } => {
                self.uid(*ty)
            }
            TypeKind::Enum { tag, ids } => {
                self.ident(tag);
                self.uint(ids.len() as u64);
                for e in ids {
                    self.ident(&e.id);
                    self.sint(e.value);
                }
            }
            TypeKind::Struct { tag, fields } | TypeKind::Union { tag, fields } => {
                self.ident(tag);
                self.fields(fields);
            }
            TypeKind::Array { ty, nelems } => {
                self.uid(*ty);
                self.uint((*nelems).into());
            }
            TypeKind::Function { ty, formals } => {
                self.uid(*ty);
                self.uint(formals.len() as u64);
                for f in formals {
                    self.uid(*f);
                }
            }
        }
        self.uint(t.size.into());
        self.uint(t.align.into());
    }
}

/// Serialize `m` into a fresh buffer.
pub fn to_bytes(m: &SymModule) -> Vec<u8> {
    let mut e = Encoder::new();
    e.module(m);
    e.buf
}

/// Serialize and report how many bytes each category accounts for.
pub fn to_bytes_accounted(m: &SymModule) -> (Vec<u8>, PickleAccount) {
    let mut e = Encoder::new();
    e.module(m);
    (e.buf, e.account)
}

/// Write the pickle of `m` to `sink`, returning the number of bytes written.
pub fn write_module<W: Write>(m: &SymModule, mut sink: W) -> io::Result<usize> {
    let bytes = to_bytes(m);
    sink.write_all(&bytes)?;
    Ok(bytes.len())
}

/// Read one pickle from `source`; the stream must end right after it.
pub fn read_module<R: Read>(mut source: R) -> Result<SymModule, PickleError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    from_bytes(&bytes)
}

/// Decode and validate a pickle held in memory.
pub fn from_bytes(bytes: &[u8]) -> Result<SymModule, PickleError> {
    if bytes.len() < MAGIC.len() {
        return if MAGIC.starts_with(bytes) {
            Err(PickleError::Truncated(bytes.len()))
        } else {
            Err(PickleError::BadMagic)
        };
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(PickleError::BadMagic);
    }
    let mut d = Decoder { bytes, pos: MAGIC.len() };
    let m = d.module()?;
    let body_end = d.pos;
    let rest = bytes.len() - body_end;
    if rest < 4 {
        return Err(PickleError::Truncated(bytes.len()));
    }
    if rest > 4 {
        return Err(PickleError::TrailingBytes(rest - 4));
    }
    let stored = u32::from_le_bytes(bytes[body_end..].try_into().expect("4 bytes"));
    let computed = crc32fast::hash(&bytes[..body_end]);
    if stored != computed {
        return Err(PickleError::Checksum { stored, computed });
    }
    m.validate()?;
    Ok(m)
}

struct Decoder<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Decoder<'_> {
    fn malformed<T>(&self, what: impl Into<String>) -> Result<T, PickleError> {
        Err(PickleError::Malformed { at: self.pos, what: what.into() })
    }

    fn byte(&mut self) -> Result<u8, PickleError> {
        let b = *self.bytes.get(self.pos).ok_or(PickleError::Truncated(self.pos))?;
        self.pos += 1;
        Ok(b)
    }

    fn uint(&mut self) -> Result<u64, PickleError> {
        let start = self.pos;
        let mut v: u64 = 0;
        let mut shift = 0;
        loop {
            let b = self.byte()?;
            if shift == 63 && b > 1 || shift > 63 {
                self.pos = start;
                return self.malformed("integer overflows 64 bits");
            }
            v |= u64::from(b & 0x7f) << shift;
            if b & 0x80 == 0 {
                // reject non-canonical encodings so each value has one pickle
                if b == 0 && shift > 0 {
                    self.pos = start;
                    return self.malformed("non-canonical integer encoding");
                }
                return Ok(v);
            }
            shift += 7;
        }
    }

    fn u32(&mut self) -> Result<u32, PickleError> {
        let at = self.pos;
        let v = self.uint()?;
        u32::try_from(v).map_err(|_| PickleError::Malformed { at, what: format!("{v} exceeds 32 bits") })
    }

    fn sint(&mut self) -> Result<i64, PickleError> {
        let v = self.uint()?;
        Ok(((v >> 1) as i64) ^ -((v & 1) as i64))
    }

    fn i32(&mut self) -> Result<i32, PickleError> {
        let at = self.pos;
        let v = self.sint()?;
        i32::try_from(v).map_err(|_| PickleError::Malformed { at, what: format!("{v} exceeds 32 bits") })
    }

    fn uid(&mut self) -> Result<Uid, PickleError> {
        self.u32().map(Uid)
    }

    fn len(&mut self) -> Result<usize, PickleError> {
        let n = self.uint()? as usize;
        // every element takes at least one byte
        if n > self.bytes.len() - self.pos {
            return Err(PickleError::Truncated(self.bytes.len()));
        }
        Ok(n)
    }

    fn ident(&mut self) -> Result<String, PickleError> {
        let n = self.len()?;
        let raw = &self.bytes[self.pos..self.pos + n];
        match std::str::from_utf8(raw) {
            Ok(s) => {
                self.pos += n;
                Ok(s.to_owned())
            }
            Err(_) => self.malformed("identifier is not UTF-8"),
        }
    }

    fn tag(&mut self, max: u32, what: &str) -> Result<u32, PickleError> {
        let at = self.pos;
        let t = self.u32()?;
        if t == 0 || t > max {
            return Err(PickleError::Malformed { at, what: format!("bad {what} constructor tag {t}") });
        }
        Ok(t)
    }

    fn coordinate(&mut self) -> Result<Coordinate, PickleError> {
        let file = self.ident()?;
        let x = self.u32()?;
        let y = self.u32()?;
        Ok(Coordinate { file, x, y })
    }

    fn module(&mut self) -> Result<SymModule, PickleError> {
        let file = self.ident()?;
        let uname = self.u32()?;
        let nuids = self.u32()?;
        let n = self.len()?;
        let mut items = Vec::with_capacity(n);
        for _ in 0..n {
            items.push(self.item()?);
        }
        let globals = self.uid()?;
        let n = self.len()?;
        let mut spoints = Vec::with_capacity(n);
        for _ in 0..n {
            let src = self.coordinate()?;
            let tail = self.uid()?;
            spoints.push(SPoint { src, tail });
        }
        Ok(SymModule { file, uname, nuids, items, globals, spoints })
    }

    fn item(&mut self) -> Result<Item, PickleError> {
        let kind = match self.tag(2, "item")? {
            1 => ItemKind::Symbol(self.symbol()?),
            _ => ItemKind::Type(self.type_node()?),
        };
        let uid = self.uid()?;
        Ok(Item { kind, uid })
    }

    fn symbol(&mut self) -> Result<Symbol, PickleError> {
        let kind = match self.tag(6, "symbol")? {
            1 => SymbolKind::Static { index: self.u32()? },
            2 => SymbolKind::Global { index: self.u32()? },
            3 => SymbolKind::Typedef,
            4 => SymbolKind::Local { offset: self.i32()? },
            5 => SymbolKind::Param { offset: self.i32()? },
            _ => SymbolKind::EnumConst { value: self.sint()? },
        };
        Ok(Symbol {
            kind,
            id: self.ident()?,
            uid: self.uid()?,
            module: self.u32()?,
            src: self.coordinate()?,
            ty: self.uid()?,
            uplink: self.uid()?,
        })
    }

    fn fields(&mut self) -> Result<Vec<FieldRec>, PickleError> {
        let n = self.len()?;
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            v.push(FieldRec {
                id: self.ident()?,
                ty: self.uid()?,
                offset: self.u32()?,
                bitsize: self.u32()?,
                lsb: self.u32()?,
            });
        }
        Ok(v)
    }

    fn type_node(&mut self) -> Result<TypeNode, PickleError> {
        let kind = match self.tag(12, "type")? {
            1 => TypeKind::Int,
            2 => TypeKind::Unsigned,
            3 => TypeKind::Float,
            4 => TypeKind::Void,
            5 => TypeKind::Pointer { ty: self.uid()? },
            6 => {
                let tag = self.ident()?;
                let n = self.len()?;
                let mut ids = Vec::with_capacity(n);
                for _ in 0..n {
                    let id = self.ident()?;
                    ids.push(EnumItem { id, value: self.sint()? });
                }
                TypeKind::Enum { tag, ids }
            }
            7 => TypeKind::Struct { tag: self.ident()?, fields: self.fields()? },
            8 => TypeKind::Union { tag: self.ident()?, fields: self.fields()? },
            9 => TypeKind::Array { ty: self.uid()?, nelems: self.u32()? },
            10 => {
                let ty = self.uid()?;
                let n = self.len()?;
                let mut formals = Vec::with_capacity(n);
                for _ in 0..n {
                    formals.push(self.uid()?);
                }
                TypeKind::Function { ty, formals }
            }
            11 => TypeKind::Const { ty: self.uid()? },
            _ => TypeKind::Volatile { ty: self.uid()? },
        };
        Ok(TypeNode { kind, size: self.u32()?, align: self.u32()? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_module_round_trips() {
        let m = SymModule::new("empty.c", 0x1234);
        let bytes = to_bytes(&m);
        assert_eq!(&bytes[..8], MAGIC);
        assert_eq!(from_bytes(&bytes).unwrap(), m);
    }

    #[test]
    fn leb128_and_zigzag_layout() {
        let mut e = Encoder::new();
        e.uint(0);
        e.uint(127);
        e.uint(128);
        e.uint(300);
        e.sint(-1);
        e.sint(1);
        e.sint(-64);
        assert_eq!(e.buf, [0x00, 0x7f, 0x80, 0x01, 0xac, 0x02, 0x01, 0x02, 0x7f]);
    }

    #[test]
    fn empty_module_exact_bytes() {
        let m = SymModule::new("a", 1);
        let bytes = to_bytes(&m);
        let mut expect = MAGIC.to_vec();
        // file "a", uname 1, nuids 0, no items, globals 0, no spoints
        expect.extend_from_slice(&[1, b'a', 1, 0, 0, 0, 0]);
        let crc = crc32fast::hash(&expect);
        expect.extend_from_slice(&crc.to_le_bytes());
        assert_eq!(bytes, expect);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(from_bytes(b"NOTAPKL\0rest"), Err(PickleError::BadMagic)));
        assert!(matches!(from_bytes(b"SYMP"), Err(PickleError::Truncated(_))));
        let bytes = to_bytes(&SymModule::new("x.c", 99));
        for cut in 8..bytes.len() {
            assert!(
                matches!(from_bytes(&bytes[..cut]), Err(PickleError::Truncated(_))),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn rejects_trailing_garbage() {
        let mut bytes = to_bytes(&SymModule::new("x.c", 99));
        bytes.push(0);
        assert!(matches!(from_bytes(&bytes), Err(PickleError::TrailingBytes(1))));
    }

    #[test]
    fn account_covers_every_byte() {
        let m = SymModule::new("x.c", 99);
        let (bytes, acct) = to_bytes_accounted(&m);
        assert_eq!(acct.total(), bytes.len());
        assert_eq!(acct.module, bytes.len());
        assert_eq!(acct.identifiers, 0);
    }
}
