//! The boot record: page 0 of every data file.
//!
//! It holds database identity, encryption state, file sizing parameters, the
//! log append cursor, and the wrapped database encryption key. It is never
//! payload-encrypted: recovery must be able to read it without any key.

use crate::keyvault::Thumbprint;
use crate::wire::{Reader, Writer};

use super::{PagerError, PAGE_SIZE};

pub const BOOT_MAGIC: &[u8] = b"TDEPGSTR";
pub const BOOT_VERSION: u32 = 1;

/// Whether page payloads and log bodies are stored encrypted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncryptionState {
    Off,
    On,
}

impl EncryptionState {
    fn to_id(self) -> u8 {
        match self {
            EncryptionState::Off => 0,
            EncryptionState::On => 1,
        }
    }

    fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(EncryptionState::Off),
            1 => Some(EncryptionState::On),
            _ => None,
        }
    }
}

impl std::fmt::Display for EncryptionState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            EncryptionState::Off => write!(f, "Off"),
            EncryptionState::On => write!(f, "On"),
        }
    }
}

/// SIZE / MAXSIZE / FILEGROWTH, converted to bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FileParams {
    pub size: u64,
    pub maxsize: u64,
    pub growth: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BootRecord {
    pub version: u32,
    pub db_uuid: [u8; 16],
    pub name: String,
    pub encryption_state: EncryptionState,
    pub algorithm_id: u8,
    pub certificate_thumbprint: Thumbprint,
    pub data_params: FileParams,
    pub log_params: FileParams,
    pub log_next_offset: u64,
    pub log_record_count: u64,
    /// Encoded wrapped DEK blob; empty until a DEK is created. Retained even
    /// while encryption is off.
    pub wrapped_dek: Vec<u8>,
}

impl BootRecord {
    pub fn has_dek(&self) -> bool {
        !self.wrapped_dek.is_empty()
    }

    /// Serialize into a full page image, zero-padded.
    pub fn encode(&self) -> Result<[u8; PAGE_SIZE], PagerError> {
        let mut w = Writer::new();
        w.bytes(BOOT_MAGIC);
        w.u32(self.version);
        w.bytes(&self.db_uuid);
        w.u8(self.encryption_state.to_id());
        w.u8(self.algorithm_id);
        w.bytes(&self.certificate_thumbprint.0);
        for params in [&self.data_params, &self.log_params] {
            w.u64(params.size);
            w.u64(params.maxsize);
            w.u64(params.growth);
        }
        w.u64(self.log_next_offset);
        w.u64(self.log_record_count);
        w.lp_string(&self.name);
        w.lp_bytes(&self.wrapped_dek);
        let bytes = w.into_inner();
        if bytes.len() > PAGE_SIZE {
            return Err(PagerError::InvalidSize(
                "boot record does not fit in one page".into(),
            ));
        }
        let mut page = [0u8; PAGE_SIZE];
        page[..bytes.len()].copy_from_slice(&bytes);
        Ok(page)
    }

    /// Parse a page-0 image.
    pub fn decode(page: &[u8]) -> Result<BootRecord, PagerError> {
        let bad = |m: &str| PagerError::BadBootRecord(m.to_string());
        if page.len() != PAGE_SIZE {
            return Err(bad("boot page has wrong length"));
        }
        let mut r = Reader::new(page);
        r.expect_magic(BOOT_MAGIC).map_err(|_| bad("bad magic"))?;
        let version = r.u32().map_err(|e| bad(&e.to_string()))?;
        if version != BOOT_VERSION {
            return Err(bad("unsupported version"));
        }
        let db_uuid = r.array::<16>().map_err(|e| bad(&e.to_string()))?;
        let encryption_state = EncryptionState::from_id(r.u8().map_err(|e| bad(&e.to_string()))?)
            .ok_or_else(|| bad("bad encryption state"))?;
        let algorithm_id = r.u8().map_err(|e| bad(&e.to_string()))?;
        let certificate_thumbprint = Thumbprint(r.array::<20>().map_err(|e| bad(&e.to_string()))?);
        let mut params = [FileParams {
            size: 0,
            maxsize: 0,
            growth: 0,
        }; 2];
        for p in params.iter_mut() {
            p.size = r.u64().map_err(|e| bad(&e.to_string()))?;
            p.maxsize = r.u64().map_err(|e| bad(&e.to_string()))?;
            p.growth = r.u64().map_err(|e| bad(&e.to_string()))?;
        }
        let log_next_offset = r.u64().map_err(|e| bad(&e.to_string()))?;
        let log_record_count = r.u64().map_err(|e| bad(&e.to_string()))?;
        let name = r.lp_string().map_err(|e| bad(&e.to_string()))?;
        let wrapped_dek = r.lp_bytes().map_err(|e| bad(&e.to_string()))?.to_vec();
        Ok(BootRecord {
            version,
            db_uuid,
            name,
            encryption_state,
            algorithm_id,
            certificate_thumbprint,
            data_params: params[0],
            log_params: params[1],
            log_next_offset,
            log_record_count,
            wrapped_dek,
        })
    }
}
