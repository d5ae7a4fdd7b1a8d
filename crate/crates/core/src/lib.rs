//! An embedded page-oriented store with transparent data encryption.
//!
//! The crate models a small database server instance: a five-level key
//! hierarchy (machine secret, service master key, database master key,
//! certificates, database encryption keys), a fixed-page data file and an
//! append-only log encrypted transparently at the I/O boundary, a DDL
//! dialect for driving it, and backup/restore that copies encrypted pages
//! verbatim.
//!
//! Module map:
//!
//! * [`cipherlab`] — pedagogical shift/reversal ciphers (CLI demo only)
//! * [`crypto`] — fixed-parameter wrappers over the cipher/hash primitives
//! * [`keyvault`] — the key hierarchy and `master.keystore` persistence
//! * [`pager`] — page/log storage with transparent encryption
//! * [`tdeparser`] — tokenizer, parser, and AST for the DDL dialect
//! * [`engine`] — server instance: statement execution, catalog, restart
//! * [`backup`] — portable `.tdebak` image format

pub mod backup;
pub mod cipherlab;
pub mod crypto;
pub mod engine;
pub mod keyvault;
pub mod pager;
pub mod tdeparser;
mod wire;

pub use backup::{BackupImage, BackupSummary};
pub use engine::{
    AccessError, DatabaseStatus, EngineError, ExecutionResult, ScriptReport, ServerInstance,
    StateView,
};
pub use keyvault::{
    CertificateInfo, DatabaseEncryptionKey, DekAlgorithm, KeyVault, KeyVaultError,
    PrivateKeyProtection, Thumbprint,
};
pub use pager::{Database, EncryptionState, PagerError, ScanReport, PAGE_PAYLOAD_SIZE, PAGE_SIZE};
pub use tdeparser::{Batch, ParseError, Statement, StatementKind};
