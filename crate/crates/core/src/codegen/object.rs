//! Relocatable object modules.

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::isa::Insn;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Binding {
    /// Visible to other units.
    Global,
    /// Private to this unit.
    Local,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SymDef {
    /// Index into [`ObjectModule::functions`].
    Function(u32),
    /// Index into [`ObjectModule::data`].
    Data(u32),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjSymbol {
    pub name: String,
    pub binding: Binding,
    /// `None` for references resolved by the linker.
    pub def: Option<SymDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjFunction {
    pub symbol: u32,
    pub nparams: u32,
    /// Bytes of frame including the shadow-frame header.
    pub frame_size: u32,
    pub code: Vec<Insn<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjReloc {
    pub offset: u32,
    pub symbol: u32,
    pub addend: i32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjData {
    pub symbol: u32,
    pub bytes: Vec<u8>,
    pub align: u32,
    pub relocs: Vec<ObjReloc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectModule {
    pub file: String,
    pub uname: u32,
    pub symbols: Vec<ObjSymbol>,
    pub functions: Vec<ObjFunction>,
    pub data: Vec<ObjData>,
    /// Symbols whose addresses form the unit's address vector, in the order
    /// of the STATIC/GLOBAL indices of the symbol table.
    pub address_vector: Vec<u32>,
    pub spoint_count: u32,
    /// The unit's symbol-table pickle.
    pub symfile: Vec<u8>,
}

#[derive(Debug, Error)]
pub enum ObjectError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed object file: {0}")]
    Format(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unresolved symbol '{0}' in module record")]
pub struct UnresolvedLabel(pub String);

impl ObjectModule {
    pub fn symfile_name(&self) -> String {
        symfile_name(self.uname)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(self).expect("object modules always serialize")
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ObjectError> {
        Ok(serde_json::from_slice(bytes)?)
    }

    pub fn write(&self, path: &Path) -> Result<(), ObjectError> {
        Ok(std::fs::write(path, self.to_bytes())?)
    }

    pub fn read(path: &Path) -> Result<Self, ObjectError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// The in-image record `{uname, addresses}` and the address vector it
    /// points to, given where each symbol landed and where the vector goes.
    pub fn emit_module_record(
        &self,
        resolve: impl Fn(u32) -> Option<u32>,
        vector_addr: u32,
    ) -> Result<([u8; 8], Vec<u8>), UnresolvedLabel> {
        let mut record = [0u8; 8];
        record[..4].copy_from_slice(&self.uname.to_le_bytes());
        record[4..].copy_from_slice(&vector_addr.to_le_bytes());
        let mut vector = Vec::with_capacity(self.address_vector.len() * 4);
        for &s in &self.address_vector {
            let addr = resolve(s).ok_or_else(|| UnresolvedLabel(self.symbols[s as usize].name.clone()))?;
            vector.extend_from_slice(&addr.to_le_bytes());
        }
        Ok((record, vector))
    }
}

/// `<uname-hex>.sym`
pub fn symfile_name(uname: u32) -> String {
    format!("{uname:08x}.sym")
}
