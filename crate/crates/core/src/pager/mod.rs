//! Fixed-size page store with transparent encryption at the I/O boundary.
//!
//! A database is a data file of 8192-byte pages (page 0 is the boot record)
//! plus an append-only log file. When the database's encryption state is on,
//! page payloads and log bodies are stored as AES-128-CTR ciphertext with an
//! HMAC tag inside the fixed page/frame layout, so turning encryption on
//! never changes a file's length. Readers always receive plaintext; callers
//! cannot tell from the API whether encryption is on.
//!
//! Layouts (all integers little-endian):
//!
//! * data file: `page 0 = boot record`, then pages 1..N. Each page is a
//!   40-byte header (page_id u64, generation u64, flags u32, reserved u32,
//!   mac 16B) followed by 8152 payload bytes.
//! * log file: magic `TDELOG01`, then frames of `u32 body length || body ||
//!   mac 16B`. Record sequence numbers are implicit (1-based, in order); the
//!   append cursor lives in the boot record.
//!
//! Per-write IVs are derived from (db_uuid, page_id, generation), and the
//! generation counter increments on every write, so rewriting a page never
//! reuses an IV. The MAC covers the header fields and the stored payload;
//! a plaintext page must carry an all-zero MAC.

mod boot;

pub use boot::{BootRecord, EncryptionState, FileParams, BOOT_MAGIC, BOOT_VERSION};

use std::fs::{File, OpenOptions};
use std::io::{Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::crypto;
use crate::keyvault::{DatabaseEncryptionKey, Thumbprint};

/// On-disk page size, fixed.
pub const PAGE_SIZE: usize = 8192;
/// Cleartext page header size.
pub const PAGE_HEADER_SIZE: usize = 40;
/// Caller-visible payload bytes per page.
pub const PAGE_PAYLOAD_SIZE: usize = PAGE_SIZE - PAGE_HEADER_SIZE;

pub const LOG_MAGIC: &[u8] = b"TDELOG01";

const FLAG_ENCRYPTED: u32 = 1;
const ENC_SUBKEY_TAG: u8 = 0x01;
const MAC_SUBKEY_TAG: u8 = 0x02;
const LOG_SUBKEY_TAG: u8 = 0x03;

#[derive(Debug, Error)]
pub enum PagerError {
    #[error("file already exists: {0}")]
    FileExists(PathBuf),
    #[error("SIZE exceeds MAXSIZE")]
    SizeExceedsMax,
    #[error("invalid size parameters: {0}")]
    InvalidSize(String),
    #[error("database file is full (MAXSIZE reached)")]
    DatabaseFull,
    #[error("log file is full (MAXSIZE reached)")]
    LogFull,
    #[error("page {0} out of range")]
    PageOutOfRange(u64),
    #[error("page {0} failed integrity verification")]
    PageCorrupt(u64),
    #[error("log record {0} failed integrity verification")]
    LogCorrupt(u64),
    #[error("payload must be exactly {PAGE_PAYLOAD_SIZE} bytes, got {0}")]
    InvalidPayload(usize),
    #[error("encryption key unavailable")]
    EncryptionKeyUnavailable,
    #[error("no database encryption key has been created")]
    NoDekCreated,
    #[error("encryption is already off")]
    AlreadyOff,
    #[error("a database encryption key already exists")]
    DekAlreadyExists,
    #[error("bad boot record: {0}")]
    BadBootRecord(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Result of a full encryption scan (`SET ENCRYPTION ON|OFF`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScanReport {
    pub pages_converted: u64,
    pub log_records_converted: u64,
    /// True when the database was already in the requested state and the
    /// call was a warning-level no-op.
    pub already_in_state: bool,
}

/// Subkeys derived from a DEK: one key in the boot record, three uses.
struct PageKeys {
    enc: [u8; 16],
    mac: [u8; 32],
    log: [u8; 16],
}

impl PageKeys {
    fn derive(dek: &DatabaseEncryptionKey) -> PageKeys {
        PageKeys {
            enc: crypto::subkey16(dek.bytes(), ENC_SUBKEY_TAG),
            mac: crypto::subkey(dek.bytes(), MAC_SUBKEY_TAG),
            log: crypto::subkey16(dek.bytes(), LOG_SUBKEY_TAG),
        }
    }
}

struct PageHeader {
    page_id: u64,
    generation: u64,
    flags: u32,
    reserved: u32,
    mac: [u8; 16],
}

impl PageHeader {
    fn parse(buf: &[u8]) -> PageHeader {
        PageHeader {
            page_id: u64::from_le_bytes(buf[0..8].try_into().unwrap()),
            generation: u64::from_le_bytes(buf[8..16].try_into().unwrap()),
            flags: u32::from_le_bytes(buf[16..20].try_into().unwrap()),
            reserved: u32::from_le_bytes(buf[20..24].try_into().unwrap()),
            mac: buf[24..40].try_into().unwrap(),
        }
    }
}

fn page_iv(db_uuid: &[u8; 16], page_id: u64, generation: u64) -> [u8; 16] {
    let digest = crypto::sha256(&[db_uuid, &page_id.to_le_bytes(), &generation.to_le_bytes()]);
    digest[..16].try_into().unwrap()
}

fn log_iv(db_uuid: &[u8; 16], sequence: u64) -> [u8; 16] {
    let digest = crypto::sha256(&[db_uuid, b"LOG", &sequence.to_le_bytes()]);
    digest[..16].try_into().unwrap()
}

fn read_at(file: &mut File, offset: u64, buf: &mut [u8]) -> std::io::Result<()> {
    file.seek(SeekFrom::Start(offset))?;
    file.read_exact(buf)
}

fn write_at(file: &mut File, offset: u64, buf: &[u8]) -> std::io::Result<()> {
    file.seek(SeekFrom::Start(offset))?;
    file.write_all(buf)
}

/// An open database: one data file, one log file, and (when available) the
/// page keys derived from the unwrapped DEK.
pub struct Database {
    data_file: File,
    log_file: File,
    data_path: PathBuf,
    log_path: PathBuf,
    boot: BootRecord,
    keys: Option<PageKeys>,
}

impl std::fmt::Debug for Database {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Database")
            .field("name", &self.boot.name)
            .field("data_path", &self.data_path)
            .field("state", &self.boot.encryption_state)
            .field("keys", &self.keys.is_some())
            .finish()
    }
}

impl Database {
    /// Create the data and log files. The data file is created at exactly
    /// `data_params.size` bytes with page 0 holding the boot record and all
    /// other pages zeroed; the log file at `log_params.size` bytes.
    pub fn create(
        name: &str,
        data_path: &Path,
        log_path: &Path,
        data_params: FileParams,
        log_params: FileParams,
    ) -> Result<Database, PagerError> {
        for params in [&data_params, &log_params] {
            if params.size == 0 || params.growth == 0 {
                return Err(PagerError::InvalidSize(
                    "SIZE and FILEGROWTH must be positive".into(),
                ));
            }
            if params.size > params.maxsize {
                return Err(PagerError::SizeExceedsMax);
            }
        }
        if data_params.size < PAGE_SIZE as u64 {
            return Err(PagerError::InvalidSize(
                "data file must hold at least the boot page".into(),
            ));
        }
        if log_params.size < LOG_MAGIC.len() as u64 {
            return Err(PagerError::InvalidSize("log file too small".into()));
        }
        if data_path.exists() {
            return Err(PagerError::FileExists(data_path.to_path_buf()));
        }
        if log_path.exists() {
            return Err(PagerError::FileExists(log_path.to_path_buf()));
        }

        let boot = BootRecord {
            version: BOOT_VERSION,
            db_uuid: crypto::random_array::<16>(),
            name: name.to_string(),
            encryption_state: EncryptionState::Off,
            algorithm_id: 0,
            certificate_thumbprint: Thumbprint([0u8; 20]),
            data_params,
            log_params,
            log_next_offset: LOG_MAGIC.len() as u64,
            log_record_count: 0,
            wrapped_dek: Vec::new(),
        };
        let boot_page = boot.encode()?;

        let mut data_file = OpenOptions::new()
            .read(true)
            .write(true)
            .create_new(true)
            .open(data_path)?;
        data_file.set_len(data_params.size)?;
        write_at(&mut data_file, 0, &boot_page)?;

        let mut log_file = OpenOptions::new()
            .read(true)
            .write(true)
            .create_new(true)
            .open(log_path)?;
        log_file.set_len(log_params.size)?;
        write_at(&mut log_file, 0, LOG_MAGIC)?;

        Ok(Database {
            data_file,
            log_file,
            data_path: data_path.to_path_buf(),
            log_path: log_path.to_path_buf(),
            boot,
            keys: None,
        })
    }

    /// Open existing data and log files. Requires no key material: the boot
    /// record is always readable.
    pub fn open(data_path: &Path, log_path: &Path) -> Result<Database, PagerError> {
        let mut data_file = OpenOptions::new().read(true).write(true).open(data_path)?;
        if data_file.metadata()?.len() < PAGE_SIZE as u64 {
            return Err(PagerError::BadBootRecord(
                "data file smaller than one page".into(),
            ));
        }
        let mut boot_page = vec![0u8; PAGE_SIZE];
        read_at(&mut data_file, 0, &mut boot_page)?;
        let boot = BootRecord::decode(&boot_page)?;

        let mut log_file = OpenOptions::new().read(true).write(true).open(log_path)?;
        let mut magic = [0u8; 8];
        read_at(&mut log_file, 0, &mut magic)
            .map_err(|_| PagerError::BadBootRecord("log file too small".into()))?;
        if magic != LOG_MAGIC {
            return Err(PagerError::BadBootRecord("bad log file magic".into()));
        }

        Ok(Database {
            data_file,
            log_file,
            data_path: data_path.to_path_buf(),
            log_path: log_path.to_path_buf(),
            boot,
            keys: None,
        })
    }

    pub fn boot(&self) -> &BootRecord {
        &self.boot
    }

    pub fn name(&self) -> &str {
        &self.boot.name
    }

    pub fn data_path(&self) -> &Path {
        &self.data_path
    }

    pub fn log_path(&self) -> &Path {
        &self.log_path
    }

    pub fn encryption_state(&self) -> EncryptionState {
        self.boot.encryption_state
    }

    pub fn data_file_len(&self) -> Result<u64, PagerError> {
        Ok(self.data_file.metadata()?.len())
    }

    pub fn log_file_len(&self) -> Result<u64, PagerError> {
        Ok(self.log_file.metadata()?.len())
    }

    /// Number of allocated data pages (excluding the boot page).
    pub fn allocated_pages(&self) -> Result<u64, PagerError> {
        Ok((self.data_file.metadata()?.len() / PAGE_SIZE as u64).saturating_sub(1))
    }

    /// Record a freshly created wrapped DEK in the boot record.
    pub fn install_dek(
        &mut self,
        algorithm_id: u8,
        thumbprint: Thumbprint,
        wrapped_dek: Vec<u8>,
    ) -> Result<(), PagerError> {
        if self.boot.has_dek() {
            return Err(PagerError::DekAlreadyExists);
        }
        self.boot.algorithm_id = algorithm_id;
        self.boot.certificate_thumbprint = thumbprint;
        self.boot.wrapped_dek = wrapped_dek;
        self.write_boot()
    }

    /// Attach an unwrapped DEK so encrypted pages can be read and written.
    pub fn attach_keys(&mut self, dek: &DatabaseEncryptionKey) {
        self.keys = Some(PageKeys::derive(dek));
    }

    pub fn has_keys(&self) -> bool {
        self.keys.is_some()
    }

    /// Write one page payload. The generation counter increments; when the
    /// database encryption state is on, the payload is stored encrypted. The
    /// file grows by FILEGROWTH (up to MAXSIZE) when `page_id` lies beyond
    /// the current allocation.
    pub fn write_page(&mut self, page_id: u64, payload: &[u8]) -> Result<(), PagerError> {
        if payload.len() != PAGE_PAYLOAD_SIZE {
            return Err(PagerError::InvalidPayload(payload.len()));
        }
        if page_id == 0 {
            return Err(PagerError::PageOutOfRange(0));
        }
        let encrypted = self.boot.encryption_state == EncryptionState::On;
        if encrypted && self.keys.is_none() {
            return Err(PagerError::EncryptionKeyUnavailable);
        }
        self.ensure_page_allocated(page_id)?;

        let mut head = [0u8; 16];
        read_at(&mut self.data_file, page_id * PAGE_SIZE as u64, &mut head)?;
        let old_generation = u64::from_le_bytes(head[8..16].try_into().unwrap());
        let generation = old_generation + 1;

        let page = self.seal_page(page_id, generation, payload, encrypted);
        write_at(&mut self.data_file, page_id * PAGE_SIZE as u64, &page)?;
        Ok(())
    }

    /// Read one page payload as plaintext, whatever the encryption state.
    /// Never-written pages read as zeroes.
    pub fn read_page(&mut self, page_id: u64) -> Result<Vec<u8>, PagerError> {
        if page_id == 0 || page_id > self.allocated_pages()? {
            return Err(PagerError::PageOutOfRange(page_id));
        }
        let mut buf = vec![0u8; PAGE_SIZE];
        read_at(&mut self.data_file, page_id * PAGE_SIZE as u64, &mut buf)?;
        let header = PageHeader::parse(&buf);
        let payload = &buf[PAGE_HEADER_SIZE..];

        if header.flags & FLAG_ENCRYPTED != 0 {
            let keys = self
                .keys
                .as_ref()
                .ok_or(PagerError::EncryptionKeyUnavailable)?;
            if header.page_id != page_id {
                return Err(PagerError::PageCorrupt(page_id));
            }
            let authentic = crypto::mac16_verify(
                &keys.mac,
                &[
                    &header.page_id.to_le_bytes(),
                    &header.generation.to_le_bytes(),
                    &header.flags.to_le_bytes(),
                    &header.reserved.to_le_bytes(),
                    payload,
                ],
                &header.mac,
            );
            if !authentic {
                return Err(PagerError::PageCorrupt(page_id));
            }
            let mut plaintext = payload.to_vec();
            let iv = page_iv(&self.boot.db_uuid, header.page_id, header.generation);
            crypto::aes128_ctr_apply(&keys.enc, &iv, &mut plaintext);
            Ok(plaintext)
        } else {
            // A plaintext page must carry an all-zero MAC; anything else is
            // an encrypted page whose flag byte was tampered with.
            if header.mac != [0u8; 16] {
                return Err(PagerError::PageCorrupt(page_id));
            }
            if header.page_id != 0 && header.page_id != page_id {
                return Err(PagerError::PageCorrupt(page_id));
            }
            Ok(payload.to_vec())
        }
    }

    /// Raw on-disk bytes of any page, boot page included. Requires no keys;
    /// this is the backup path.
    pub fn raw_page(&mut self, index: u64) -> Result<Vec<u8>, PagerError> {
        if index > self.allocated_pages()? {
            return Err(PagerError::PageOutOfRange(index));
        }
        let mut buf = vec![0u8; PAGE_SIZE];
        read_at(&mut self.data_file, index * PAGE_SIZE as u64, &mut buf)?;
        Ok(buf)
    }

    /// Raw bytes of the whole log file. Requires no keys.
    pub fn raw_log(&mut self) -> Result<Vec<u8>, PagerError> {
        let len = self.log_file.metadata()?.len() as usize;
        let mut buf = vec![0u8; len];
        read_at(&mut self.log_file, 0, &mut buf)?;
        Ok(buf)
    }

    /// Append a log record; returns its sequence number (1-based). The body
    /// is stored encrypted when the encryption state is on.
    pub fn append_log_record(&mut self, body: &[u8]) -> Result<u64, PagerError> {
        let encrypted = self.boot.encryption_state == EncryptionState::On;
        if encrypted && self.keys.is_none() {
            return Err(PagerError::EncryptionKeyUnavailable);
        }
        let frame_len = 4 + body.len() as u64 + crypto::MAC_LEN as u64;
        let offset = self.boot.log_next_offset;
        self.ensure_log_capacity(offset + frame_len)?;

        let sequence = self.boot.log_record_count + 1;
        let mut stored = body.to_vec();
        let mac = if encrypted {
            let keys = self.keys.as_ref().unwrap();
            let iv = log_iv(&self.boot.db_uuid, sequence);
            crypto::aes128_ctr_apply(&keys.log, &iv, &mut stored);
            crypto::mac16(&keys.mac, &[&sequence.to_le_bytes(), &stored])
        } else {
            [0u8; 16]
        };

        let mut frame = Vec::with_capacity(frame_len as usize);
        frame.extend_from_slice(&(body.len() as u32).to_le_bytes());
        frame.extend_from_slice(&stored);
        frame.extend_from_slice(&mac);
        write_at(&mut self.log_file, offset, &frame)?;

        self.boot.log_record_count = sequence;
        self.boot.log_next_offset = offset + frame_len;
        self.write_boot()?;
        Ok(sequence)
    }

    /// Read back all log record bodies as plaintext.
    pub fn read_log_records(&mut self) -> Result<Vec<Vec<u8>>, PagerError> {
        let encrypted = self.boot.encryption_state == EncryptionState::On;
        if encrypted && self.keys.is_none() {
            return Err(PagerError::EncryptionKeyUnavailable);
        }
        let mut records = Vec::with_capacity(self.boot.log_record_count as usize);
        let mut offset = LOG_MAGIC.len() as u64;
        for sequence in 1..=self.boot.log_record_count {
            let (body_len, mut stored, mac) = self.read_log_frame(offset, sequence)?;
            if encrypted {
                let keys = self.keys.as_ref().unwrap();
                if !crypto::mac16_verify(&keys.mac, &[&sequence.to_le_bytes(), &stored], &mac) {
                    return Err(PagerError::LogCorrupt(sequence));
                }
                let iv = log_iv(&self.boot.db_uuid, sequence);
                crypto::aes128_ctr_apply(&keys.log, &iv, &mut stored);
            } else if mac != [0u8; 16] {
                return Err(PagerError::LogCorrupt(sequence));
            }
            records.push(stored);
            offset += 4 + body_len as u64 + crypto::MAC_LEN as u64;
        }
        Ok(records)
    }

    /// Encrypt every allocated page and every log record in place, then set
    /// the encryption state to on. Synchronous full scan; file lengths do
    /// not change. Calling it while already on is a warning-level no-op.
    pub fn set_encryption_on(
        &mut self,
        dek: &DatabaseEncryptionKey,
    ) -> Result<ScanReport, PagerError> {
        if !self.boot.has_dek() {
            return Err(PagerError::NoDekCreated);
        }
        if self.boot.encryption_state == EncryptionState::On {
            return Ok(ScanReport {
                pages_converted: 0,
                log_records_converted: 0,
                already_in_state: true,
            });
        }
        self.keys = Some(PageKeys::derive(dek));
        let report = self.convert_all(true)?;
        self.boot.encryption_state = EncryptionState::On;
        self.write_boot()?;
        Ok(report)
    }

    /// Decrypt every allocated page and log record in place, then set the
    /// state to off. The wrapped DEK is retained in the boot record.
    pub fn set_encryption_off(&mut self) -> Result<ScanReport, PagerError> {
        if self.boot.encryption_state == EncryptionState::Off {
            return Err(PagerError::AlreadyOff);
        }
        if self.keys.is_none() {
            return Err(PagerError::EncryptionKeyUnavailable);
        }
        let report = self.convert_all(false)?;
        self.boot.encryption_state = EncryptionState::Off;
        self.write_boot()?;
        Ok(report)
    }

    fn convert_all(&mut self, encrypt: bool) -> Result<ScanReport, PagerError> {
        let total_pages = self.allocated_pages()?;
        for page_id in 1..=total_pages {
            let mut buf = vec![0u8; PAGE_SIZE];
            read_at(&mut self.data_file, page_id * PAGE_SIZE as u64, &mut buf)?;
            let header = PageHeader::parse(&buf);
            let payload = self.open_stored_page(page_id, &header, &buf[PAGE_HEADER_SIZE..])?;
            let page = self.seal_page(page_id, header.generation + 1, &payload, encrypt);
            write_at(&mut self.data_file, page_id * PAGE_SIZE as u64, &page)?;
        }

        let was_encrypted = self.boot.encryption_state == EncryptionState::On;
        let mut offset = LOG_MAGIC.len() as u64;
        for sequence in 1..=self.boot.log_record_count {
            let (body_len, stored, mac) = self.read_log_frame(offset, sequence)?;
            let keys = self.keys.as_ref().unwrap();
            let mut body = stored;
            if was_encrypted {
                if !crypto::mac16_verify(&keys.mac, &[&sequence.to_le_bytes(), &body], &mac) {
                    return Err(PagerError::LogCorrupt(sequence));
                }
                let iv = log_iv(&self.boot.db_uuid, sequence);
                crypto::aes128_ctr_apply(&keys.log, &iv, &mut body);
            } else if mac != [0u8; 16] {
                return Err(PagerError::LogCorrupt(sequence));
            }

            let new_mac = if encrypt {
                let iv = log_iv(&self.boot.db_uuid, sequence);
                crypto::aes128_ctr_apply(&keys.log, &iv, &mut body);
                crypto::mac16(&keys.mac, &[&sequence.to_le_bytes(), &body])
            } else {
                [0u8; 16]
            };
            let mut frame = Vec::with_capacity(4 + body.len() + crypto::MAC_LEN);
            frame.extend_from_slice(&(body_len).to_le_bytes());
            frame.extend_from_slice(&body);
            frame.extend_from_slice(&new_mac);
            write_at(&mut self.log_file, offset, &frame)?;
            offset += 4 + body_len as u64 + crypto::MAC_LEN as u64;
        }

        Ok(ScanReport {
            pages_converted: total_pages,
            log_records_converted: self.boot.log_record_count,
            already_in_state: false,
        })
    }

    /// Decode a stored page into its plaintext payload, verifying integrity
    /// when it is encrypted.
    fn open_stored_page(
        &self,
        page_id: u64,
        header: &PageHeader,
        payload: &[u8],
    ) -> Result<Vec<u8>, PagerError> {
        if header.flags & FLAG_ENCRYPTED != 0 {
            let keys = self
                .keys
                .as_ref()
                .ok_or(PagerError::EncryptionKeyUnavailable)?;
            let authentic = crypto::mac16_verify(
                &keys.mac,
                &[
                    &header.page_id.to_le_bytes(),
                    &header.generation.to_le_bytes(),
                    &header.flags.to_le_bytes(),
                    &header.reserved.to_le_bytes(),
                    payload,
                ],
                &header.mac,
            );
            if !authentic || header.page_id != page_id {
                return Err(PagerError::PageCorrupt(page_id));
            }
            let mut plaintext = payload.to_vec();
            let iv = page_iv(&self.boot.db_uuid, header.page_id, header.generation);
            crypto::aes128_ctr_apply(&keys.enc, &iv, &mut plaintext);
            Ok(plaintext)
        } else {
            if header.mac != [0u8; 16] {
                return Err(PagerError::PageCorrupt(page_id));
            }
            Ok(payload.to_vec())
        }
    }

    fn seal_page(&self, page_id: u64, generation: u64, payload: &[u8], encrypted: bool) -> Vec<u8> {
        let flags: u32 = if encrypted { FLAG_ENCRYPTED } else { 0 };
        let reserved: u32 = 0;
        let mut stored = payload.to_vec();
        let mac = if encrypted {
            let keys = self.keys.as_ref().expect("checked by callers");
            let iv = page_iv(&self.boot.db_uuid, page_id, generation);
            crypto::aes128_ctr_apply(&keys.enc, &iv, &mut stored);
            crypto::mac16(
                &keys.mac,
                &[
                    &page_id.to_le_bytes(),
                    &generation.to_le_bytes(),
                    &flags.to_le_bytes(),
                    &reserved.to_le_bytes(),
                    &stored,
                ],
            )
        } else {
            [0u8; 16]
        };

        let mut page = Vec::with_capacity(PAGE_SIZE);
        page.extend_from_slice(&page_id.to_le_bytes());
        page.extend_from_slice(&generation.to_le_bytes());
        page.extend_from_slice(&flags.to_le_bytes());
        page.extend_from_slice(&reserved.to_le_bytes());
        page.extend_from_slice(&mac);
        page.extend_from_slice(&stored);
        page
    }

    fn read_log_frame(
        &mut self,
        offset: u64,
        sequence: u64,
    ) -> Result<(u32, Vec<u8>, [u8; 16]), PagerError> {
        let log_len = self.log_file.metadata()?.len();
        if offset + 4 > log_len {
            return Err(PagerError::LogCorrupt(sequence));
        }
        let mut len_buf = [0u8; 4];
        read_at(&mut self.log_file, offset, &mut len_buf)?;
        let body_len = u32::from_le_bytes(len_buf);
        let frame_end = offset + 4 + body_len as u64 + crypto::MAC_LEN as u64;
        if frame_end > log_len {
            return Err(PagerError::LogCorrupt(sequence));
        }
        let mut stored = vec![0u8; body_len as usize];
        read_at(&mut self.log_file, offset + 4, &mut stored)?;
        let mut mac = [0u8; 16];
        read_at(&mut self.log_file, offset + 4 + body_len as u64, &mut mac)?;
        Ok((body_len, stored, mac))
    }

    fn ensure_page_allocated(&mut self, page_id: u64) -> Result<(), PagerError> {
        let len = self.data_file.metadata()?.len();
        let needed = (page_id + 1) * PAGE_SIZE as u64;
        if needed <= len {
            return Ok(());
        }
        if needed > self.boot.data_params.maxsize {
            return Err(PagerError::DatabaseFull);
        }
        let mut new_len = len;
        while new_len < needed {
            new_len = (new_len + self.boot.data_params.growth).min(self.boot.data_params.maxsize);
        }
        self.data_file.set_len(new_len)?;
        Ok(())
    }

    fn ensure_log_capacity(&mut self, needed: u64) -> Result<(), PagerError> {
        let len = self.log_file.metadata()?.len();
        if needed <= len {
            return Ok(());
        }
        if needed > self.boot.log_params.maxsize {
            return Err(PagerError::LogFull);
        }
        let mut new_len = len;
        while new_len < needed {
            new_len = (new_len + self.boot.log_params.growth).min(self.boot.log_params.maxsize);
        }
        self.log_file.set_len(new_len)?;
        Ok(())
    }

    fn write_boot(&mut self) -> Result<(), PagerError> {
        let page = self.boot.encode()?;
        write_at(&mut self.data_file, 0, &page)?;
        Ok(())
    }
}
