//! Size accounting for the debugging data of an image.

use std::fmt;

use crate::link::{ExecutableImage, MODULE_RECORD_SIZE};
use crate::symtab::{self, PickleAccount};

/// Bytes attributable to one linked unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnitStats {
    pub file: String,
    pub uname: u32,
    /// `None` when the symbol file could not be read.
    pub symfile: Option<PickleAccount>,
    pub symfile_bytes: usize,
    /// The in-image record and its `_Nub_modules` slot.
    pub record_bytes: usize,
    pub vector_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StatsReport {
    pub units: Vec<UnitStats>,
    pub bpflags: usize,
    /// `_Nub_tos` and the `_Nub_modules` terminator.
    pub fixed: usize,
}

/// Category totals in the order they are printed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Categories {
    pub identifiers: usize,
    pub symbols: usize,
    pub types: usize,
    pub coordinates: usize,
    pub module_records: usize,
    pub address_vectors: usize,
    pub breakpoint_flags: usize,
}

impl Categories {
    pub fn total(&self) -> usize {
        self.identifiers
            + self.symbols
            + self.types
            + self.coordinates
            + self.module_records
            + self.address_vectors
            + self.breakpoint_flags
    }
}

impl UnitStats {
    /// This unit's share, without the breakpoint flags the image shares.
    pub fn categories(&self) -> Categories {
        let mut c = Categories {
            module_records: self.record_bytes,
            address_vectors: self.vector_bytes,
            ..Default::default()
        };
        if let Some(a) = &self.symfile {
            c.identifiers = a.identifiers;
            c.symbols = a.symbols;
            c.types = a.types;
            c.coordinates = a.coordinates;
            c.module_records += a.module;
        }
        c
    }
}

impl StatsReport {
    /// Account for `image`; `load` returns each unit's symbol file.
    pub fn compute(image: &ExecutableImage, load: impl Fn(u32) -> Option<Vec<u8>>) -> Self {
        let units = image
            .manifest
            .iter()
            .map(|e| {
                let bytes = load(e.uname);
                let account = bytes
                    .as_ref()
                    .and_then(|b| symtab::from_bytes(b).ok())
                    .map(|m| symtab::to_bytes_accounted(&m).1);
                UnitStats {
                    file: e.file.clone(),
                    uname: e.uname,
                    symfile_bytes: if account.is_some() { bytes.map_or(0, |b| b.len()) } else { 0 },
                    symfile: account,
                    record_bytes: MODULE_RECORD_SIZE as usize + 4,
                    vector_bytes: 4 * e.vector_len as usize,
                }
            })
            .collect();
        StatsReport { units, bpflags: image.bpflags_len as usize, fixed: 8 }
    }

    /// Module records include each pickle's header and checksum.
    pub fn categories(&self) -> Categories {
        let mut c = Categories { breakpoint_flags: self.bpflags, module_records: self.fixed, ..Default::default() };
        for u in &self.units {
            let uc = u.categories();
            c.identifiers += uc.identifiers;
            c.symbols += uc.symbols;
            c.types += uc.types;
            c.coordinates += uc.coordinates;
            c.module_records += uc.module_records;
            c.address_vectors += uc.address_vectors;
        }
        c
    }

    pub fn symfile_total(&self) -> usize {
        self.units.iter().map(|u| u.symfile_bytes).sum()
    }

    pub fn image_total(&self) -> usize {
        self.fixed + self.bpflags + self.units.iter().map(|u| u.record_bytes + u.vector_bytes).sum::<usize>()
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.categories();
        writeln!(f, "{:<28}{:>10}", "category", "bytes")?;
        for (name, v) in [
            ("identifiers and file names", c.identifiers),
            ("symbols", c.symbols),
            ("types", c.types),
            ("source coordinates", c.coordinates),
            ("module records", c.module_records),
            ("address vectors", c.address_vectors),
            ("breakpoint flags", c.breakpoint_flags),
        ] {
            writeln!(f, "{name:<28}{v:>10}")?;
        }
        writeln!(f, "{:<28}{:>10}", "total", c.total())?;
        writeln!(f)?;
        writeln!(f, "{} module records", self.units.len())?;
        for u in &self.units {
            match u.symfile {
                Some(_) => writeln!(f, "  {} {:08x}: symbol file {} bytes", u.file, u.uname, u.symfile_bytes)?,
                None => writeln!(f, "  {} {:08x}: symbol file absent", u.file, u.uname)?,
            }
        }
        Ok(())
    }
}
