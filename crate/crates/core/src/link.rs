//! Links object modules into an executable image.
//!
//! Memory layout of an image:
//!
//! ```text
//! 0x0000_0000  guard page (unmapped)
//! 0x0000_1000  _Nub_tos, then each unit's data in link order
//! meta_base    module records {uname, vector}, address vectors, _Nub_modules
//! heap_base    malloc arena growing up
//!              stack growing down from STACK_TOP
//! 0xC000_0000  function addresses (CODE_BASE + 16 * index, not memory)
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codegen::isa::Insn;
use crate::codegen::object::{symfile_name, Binding, ObjectError, ObjectModule, SymDef};
use crate::codegen::NUB_TOS;

pub const DATA_BASE: u32 = 0x1000;
pub const STACK_TOP: u32 = 0x10_0000;
pub const CODE_BASE: u32 = 0xC000_0000;
pub const MODULE_RECORD_SIZE: u32 = 8;

/// Address of function number `index`.
pub fn function_address(index: u32) -> u32 {
    CODE_BASE + 16 * index
}

/// Function number at `addr`, if it is a function address.
pub fn function_index(addr: u32) -> Option<u32> {
    (addr >= CODE_BASE && (addr - CODE_BASE).is_multiple_of(16)).then(|| (addr - CODE_BASE) / 16)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkedFunction {
    pub name: String,
    pub uname: u32,
    pub nparams: u32,
    pub frame_size: u32,
    pub code: Vec<Insn<u32>>,
}

/// One linked unit as seen by the debugger.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub file: String,
    pub uname: u32,
    pub spoint_count: u32,
    /// Symbol file, relative to the executable's directory.
    pub symfile: String,
    /// Address of the unit's module record.
    pub record: u32,
    pub vector_len: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutableImage {
    pub functions: Vec<LinkedFunction>,
    /// Initial contents of memory from `DATA_BASE` up to `heap_base`.
    pub data: Vec<u8>,
    pub nub_tos: u32,
    pub nub_modules: u32,
    pub meta_base: u32,
    pub meta_len: u32,
    pub heap_base: u32,
    pub bpflags_len: u32,
    pub entry: u32,
    pub manifest: Vec<ManifestEntry>,
}

#[derive(Debug, Error)]
pub enum LinkError {
    #[error("duplicate definition of '{name}' in {first} and {second}")]
    Duplicate { name: String, first: String, second: String },
    #[error("undefined symbol '{name}' referenced in {unit}")]
    Undefined { name: String, unit: String },
    #[error("units {first} and {second} share uname {uname:#010x}")]
    UnameCollision { uname: u32, first: String, second: String },
    #[error("entry function '{0}' is not defined")]
    NoEntry(String),
    #[error("'{0}' is not a function")]
    EntryNotFunction(String),
    #[error("image does not fit below the stack")]
    TooLarge,
    #[error(transparent)]
    Record(#[from] crate::codegen::object::UnresolvedLabel),
}

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed executable: {0}")]
    Format(#[from] serde_json::Error),
    #[error(transparent)]
    Object(#[from] ObjectError),
}

/// A linked image plus the symbol files it refers to.
#[derive(Debug, Clone)]
pub struct Linked {
    pub image: ExecutableImage,
    pub symfiles: BTreeMap<u32, Vec<u8>>,
}

impl Linked {
    /// Write the image to `path` and its symbol files beside it.
    pub fn write(&self, path: &Path) -> Result<(), ImageError> {
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        for entry in &self.image.manifest {
            std::fs::write(dir.join(&entry.symfile), &self.symfiles[&entry.uname])?;
        }
        self.image.write(path)
    }
}

impl ExecutableImage {
    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("images always serialize")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ImageError> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), ImageError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn read(path: &Path) -> Result<Self, ImageError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// Directory holding the symbol files of an image read from `path`.
    pub fn symfile_dir(path: &Path) -> PathBuf {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    }

    pub fn function_by_name(&self, name: &str) -> Option<u32> {
        self.functions.iter().position(|f| f.name == name).map(|i| i as u32)
    }
}

fn align_up(v: u32, a: u32) -> u32 {
    v.div_ceil(a.max(1)) * a.max(1)
}

fn write_u32(buf: &mut [u8], at: usize, v: u32) {
    buf[at..at + 4].copy_from_slice(&v.to_le_bytes());
}

/// Link `objects`, entering at the function named `entry`.
pub fn link(objects: &[ObjectModule], entry: &str) -> Result<Linked, LinkError> {
    let mut unames: HashMap<u32, &str> = HashMap::new();
    for o in objects {
        if let Some(first) = unames.insert(o.uname, &o.file) {
            return Err(LinkError::UnameCollision { uname: o.uname, first: first.into(), second: o.file.clone() });
        }
    }

    // function numbering and global definitions
    let mut fn_base = Vec::with_capacity(objects.len());
    let mut nfuncs = 0u32;
    for o in objects {
        fn_base.push(nfuncs);
        nfuncs += o.functions.len() as u32;
    }
    let mut globals: HashMap<&str, (usize, SymDef)> = HashMap::new();
    for (oi, o) in objects.iter().enumerate() {
        for s in &o.symbols {
            let (Binding::Global, Some(def)) = (s.binding, s.def) else { continue };
            if s.name == NUB_TOS {
                return Err(LinkError::Duplicate { name: s.name.clone(), first: "the linker".into(), second: o.file.clone() });
            }
            if let Some((first, _)) = globals.insert(&s.name, (oi, def)) {
                return Err(LinkError::Duplicate {
                    name: s.name.clone(),
                    first: objects[first].file.clone(),
                    second: o.file.clone(),
                });
            }
        }
    }

    // data layout
    let nub_tos = DATA_BASE;
    let mut addr = DATA_BASE + 4;
    let mut data_addr: Vec<Vec<u32>> = Vec::with_capacity(objects.len());
    for o in objects {
        let mut v = Vec::with_capacity(o.data.len());
        for d in &o.data {
            addr = align_up(addr, d.align);
            v.push(addr);
            addr += d.bytes.len() as u32;
        }
        data_addr.push(v);
    }
    let meta_base = align_up(addr, 8);

    let def_addr = |oi: usize, def: SymDef| match def {
        SymDef::Function(i) => function_address(fn_base[oi] + i),
        SymDef::Data(i) => data_addr[oi][i as usize],
    };
    let mut resolved: Vec<Vec<u32>> = Vec::with_capacity(objects.len());
    for (oi, o) in objects.iter().enumerate() {
        let mut v = Vec::with_capacity(o.symbols.len());
        for s in &o.symbols {
            let a = match s.def {
                Some(def) => def_addr(oi, def),
                None if s.name == NUB_TOS => nub_tos,
                None => match globals.get(s.name.as_str()) {
                    Some(&(gi, def)) => def_addr(gi, def),
                    None => return Err(LinkError::Undefined { name: s.name.clone(), unit: o.file.clone() }),
                },
            };
            v.push(a);
        }
        resolved.push(v);
    }

    // meta region: records, vectors, then the null-terminated table
    let n = objects.len() as u32;
    let mut vec_addr = meta_base + n * MODULE_RECORD_SIZE;
    let mut records = Vec::new();
    let mut vectors = Vec::new();
    let mut manifest = Vec::new();
    for (oi, o) in objects.iter().enumerate() {
        let (record, vector) = o.emit_module_record(|s| resolved[oi].get(s as usize).copied(), vec_addr)?;
        manifest.push(ManifestEntry {
            file: o.file.clone(),
            uname: o.uname,
            spoint_count: o.spoint_count,
            symfile: symfile_name(o.uname),
            record: meta_base + oi as u32 * MODULE_RECORD_SIZE,
            vector_len: o.address_vector.len() as u32,
        });
        records.extend_from_slice(&record);
        vec_addr += vector.len() as u32;
        vectors.extend_from_slice(&vector);
    }
    let nub_modules = align_up(vec_addr, 4);
    let mut table = Vec::new();
    for m in &manifest {
        table.extend_from_slice(&m.record.to_le_bytes());
    }
    table.extend_from_slice(&0u32.to_le_bytes());
    let meta_len = nub_modules + table.len() as u32 - meta_base;
    let heap_base = align_up(meta_base + meta_len, 16);
    if heap_base >= STACK_TOP / 2 {
        return Err(LinkError::TooLarge);
    }

    let mut data = vec![0u8; (heap_base - DATA_BASE) as usize];
    for (oi, o) in objects.iter().enumerate() {
        for (di, d) in o.data.iter().enumerate() {
            let at = (data_addr[oi][di] - DATA_BASE) as usize;
            data[at..at + d.bytes.len()].copy_from_slice(&d.bytes);
            for r in &d.relocs {
                let target = resolved[oi][r.symbol as usize].wrapping_add(r.addend as u32);
                write_u32(&mut data, at + r.offset as usize, target);
            }
        }
    }
    let meta_at = (meta_base - DATA_BASE) as usize;
    data[meta_at..meta_at + records.len()].copy_from_slice(&records);
    let at = meta_at + records.len();
    data[at..at + vectors.len()].copy_from_slice(&vectors);
    let at = (nub_modules - DATA_BASE) as usize;
    data[at..at + table.len()].copy_from_slice(&table);

    let mut functions = Vec::with_capacity(nfuncs as usize);
    for (oi, o) in objects.iter().enumerate() {
        for f in &o.functions {
            let code = f
                .code
                .iter()
                .cloned()
                .map(|i| i.map_sym(|s| Ok::<_, std::convert::Infallible>(resolved[oi][s as usize])).unwrap())
                .collect();
            functions.push(LinkedFunction {
                name: o.symbols[f.symbol as usize].name.clone(),
                uname: o.uname,
                nparams: f.nparams,
                frame_size: f.frame_size,
                code,
            });
        }
    }

    let entry = match globals.get(entry) {
        Some(&(gi, SymDef::Function(i))) => fn_base[gi] + i,
        Some(_) => return Err(LinkError::EntryNotFunction(entry.into())),
        None => return Err(LinkError::NoEntry(entry.into())),
    };
    let bpflags_len = objects.iter().map(|o| o.spoint_count).max().unwrap_or(0);
    let symfiles = objects.iter().map(|o| (o.uname, o.symfile.clone())).collect();
    Ok(Linked {
        image: ExecutableImage {
            functions,
            data,
            nub_tos,
            nub_modules,
            meta_base,
            meta_len,
            heap_base,
            bpflags_len,
            entry,
            manifest,
        },
        symfiles,
    })
}
