//! Instance catalog: which databases exist and which files hold them.
//!
//! Persisted as `catalog.manifest` — a header plus length-prefixed records,
//! little-endian, rewritten atomically via temp-file rename. File names are
//! stored relative to the instance directory so two instances built from the
//! same script produce byte-identical manifests.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use thiserror::Error;

use crate::wire::{Reader, Writer};

const MANIFEST_MAGIC: &[u8] = b"TDECAT01";
const MANIFEST_VERSION: u32 = 1;
const RECORD_DATABASE: u8 = 1;

#[derive(Debug, Error)]
pub enum CatalogError {
    #[error("corrupt catalog manifest: {0}")]
    Corrupt(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One cataloged database: its name and file basenames within the instance
/// directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatalogEntry {
    pub name: String,
    pub data_file: String,
    pub log_file: String,
}

#[derive(Debug, Default, Clone)]
pub struct Catalog {
    entries: Vec<CatalogEntry>,
}

impl Catalog {
    pub fn load(path: &Path) -> Result<Catalog, CatalogError> {
        if !path.exists() {
            return Ok(Catalog::default());
        }
        let bytes = fs::read(path)?;
        Self::parse(&bytes)
    }

    fn parse(bytes: &[u8]) -> Result<Catalog, CatalogError> {
        let corrupt = |m: String| CatalogError::Corrupt(m);
        let mut r = Reader::new(bytes);
        r.expect_magic(MANIFEST_MAGIC)
            .map_err(|_| corrupt("bad magic".into()))?;
        let version = r.u32().map_err(|e| corrupt(e.to_string()))?;
        if version != MANIFEST_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let mut entries = Vec::new();
        while !r.is_empty() {
            let record_type = r.u8().map_err(|e| corrupt(e.to_string()))?;
            if record_type != RECORD_DATABASE {
                return Err(corrupt(format!("unknown record type {record_type}")));
            }
            let body = r.lp_bytes().map_err(|e| corrupt(e.to_string()))?;
            let mut b = Reader::new(body);
            let entry = CatalogEntry {
                name: b.lp_string().map_err(|e| corrupt(e.to_string()))?,
                data_file: b.lp_string().map_err(|e| corrupt(e.to_string()))?,
                log_file: b.lp_string().map_err(|e| corrupt(e.to_string()))?,
            };
            if !b.is_empty() {
                return Err(corrupt("trailing bytes in database record".into()));
            }
            entries.push(entry);
        }
        Ok(Catalog { entries })
    }

    pub fn save(&self, path: &Path) -> Result<(), CatalogError> {
        let mut w = Writer::new();
        w.bytes(MANIFEST_MAGIC);
        w.u32(MANIFEST_VERSION);
        for entry in &self.entries {
            let mut body = Writer::new();
            body.lp_string(&entry.name);
            body.lp_string(&entry.data_file);
            body.lp_string(&entry.log_file);
            w.u8(RECORD_DATABASE);
            w.lp_bytes(&body.into_inner());
        }
        let tmp = path.with_extension("tmp");
        let mut file = fs::File::create(&tmp)?;
        file.write_all(&w.into_inner())?;
        file.sync_all()?;
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn entries(&self) -> &[CatalogEntry] {
        &self.entries
    }

    pub fn find(&self, name: &str) -> Option<&CatalogEntry> {
        self.entries
            .iter()
            .find(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.find(name).is_some()
    }

    /// True when any entry references the given file basename.
    pub fn references_file(&self, file: &str) -> bool {
        self.entries
            .iter()
            .any(|e| e.data_file == file || e.log_file == file)
    }

    pub fn add(&mut self, entry: CatalogEntry) {
        self.entries.push(entry);
    }

    pub fn remove(&mut self, name: &str) -> Option<CatalogEntry> {
        let index = self
            .entries
            .iter()
            .position(|e| e.name.eq_ignore_ascii_case(name))?;
        Some(self.entries.remove(index))
    }
}
