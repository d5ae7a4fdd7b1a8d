//! Server-instance state machine.
//!
//! A [`ServerInstance`] owns one data directory: the key store, the catalog
//! manifest, a lock file, and the attached databases. It executes parsed DDL
//! statements against those, tracks the current database context (`USE`),
//! and evaluates per-database accessibility at open time — a database whose
//! encryption key cannot be unwrapped is marked inaccessible with the cause
//! rather than failing instance startup.
//!
//! Restart semantics are explicit: [`ServerInstance::restart`] discards all
//! in-memory key material and re-derives accessibility from the persisted
//! stores, which is where the password-protected-certificate lockout becomes
//! observable.

mod catalog;

pub use catalog::{Catalog, CatalogEntry, CatalogError};

use std::collections::BTreeMap;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;
use zeroize::Zeroizing;

use crate::backup::{self, BackupError, BackupSummary};
use crate::keyvault::{DekAlgorithm, KeyVault, KeyVaultError};
use crate::pager::{Database, EncryptionState, FileParams, PagerError};
use crate::tdeparser::{self, ParseError, Statement, StatementKind};

pub const KEYSTORE_FILE: &str = "master.keystore";
pub const CATALOG_FILE: &str = "catalog.manifest";
pub const LOCK_FILE: &str = "instance.lock";
pub const MASTER_CONTEXT: &str = "master";

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("instance lock held: {0}")]
    LockHeld(PathBuf),
    #[error("database not found: {0}")]
    DatabaseNotFound(String),
    #[error("database name already in use: {0}")]
    DuplicateDatabaseName(String),
    #[error("database '{name}' is inaccessible: {cause}")]
    DatabaseInaccessible { name: String, cause: AccessError },
    #[error("file already referenced by the catalog: {0}")]
    FileInUse(String),
    #[error("invalid file path: {0:?}")]
    BadPath(String),
    #[error("{0}")]
    ContextError(String),
    #[error(transparent)]
    Vault(#[from] KeyVaultError),
    #[error(transparent)]
    Pager(#[from] PagerError),
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Backup(#[from] BackupError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Why a database could not be opened. Stored on the catalog entry instead
/// of failing instance startup.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessError {
    CertificateNotFound,
    PrivateKeyLocked,
    NoDatabaseMasterKey,
    DecryptFailed,
    BadBootRecord,
    Io,
}

impl std::fmt::Display for AccessError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            AccessError::CertificateNotFound => "CertificateNotFound",
            AccessError::PrivateKeyLocked => "PrivateKeyLocked",
            AccessError::NoDatabaseMasterKey => "NoDatabaseMasterKey",
            AccessError::DecryptFailed => "DecryptFailed",
            AccessError::BadBootRecord => "BadBootRecord",
            AccessError::Io => "Io",
        };
        write!(f, "{name}")
    }
}

fn vault_fault(err: &KeyVaultError) -> AccessError {
    match err {
        KeyVaultError::CertificateNotFound(_) => AccessError::CertificateNotFound,
        KeyVaultError::PrivateKeyLocked => AccessError::PrivateKeyLocked,
        KeyVaultError::NoDatabaseMasterKey => AccessError::NoDatabaseMasterKey,
        _ => AccessError::DecryptFailed,
    }
}

fn pager_fault(err: &PagerError) -> AccessError {
    match err {
        PagerError::BadBootRecord(_) => AccessError::BadBootRecord,
        PagerError::Io(_) => AccessError::Io,
        _ => AccessError::BadBootRecord,
    }
}

/// Encryption state as shown by `status`, including the case where the boot
/// record itself cannot be read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StateView {
    Off,
    On,
    Unknown,
}

impl std::fmt::Display for StateView {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StateView::Off => write!(f, "Off"),
            StateView::On => write!(f, "On"),
            StateView::Unknown => write!(f, "Unknown"),
        }
    }
}

/// One row of `status` output.
#[derive(Debug, Clone)]
pub struct DatabaseStatus {
    pub name: String,
    pub encryption_state: StateView,
    pub accessible: bool,
    pub last_error: Option<AccessError>,
}

/// Successful outcome of one statement.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecutionResult {
    pub line: u32,
    pub message: String,
}

/// Failed outcome of one statement, carrying its source line.
#[derive(Debug, Error)]
#[error("line {line}: {error}")]
pub struct StatementError {
    pub line: u32,
    #[source]
    pub error: EngineError,
}

/// Outcome of running a whole script.
#[derive(Debug)]
pub struct ScriptReport {
    pub outcomes: Vec<Result<ExecutionResult, StatementError>>,
}

impl ScriptReport {
    pub fn succeeded(&self) -> bool {
        self.outcomes.iter().all(Result::is_ok)
    }
}

struct InstanceLock {
    path: PathBuf,
}

impl InstanceLock {
    fn acquire(path: PathBuf) -> Result<InstanceLock, EngineError> {
        match fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(mut file) => {
                let _ = write!(file, "{}", std::process::id());
                Ok(InstanceLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                Err(EngineError::LockHeld(path))
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for InstanceLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

/// An attached database: the catalog entry, the open pager handle (absent
/// when even the files cannot be opened), and the open fault, if any.
struct Slot {
    entry: CatalogEntry,
    db: Option<Database>,
    fault: Option<AccessError>,
}

impl Slot {
    fn accessible(&self) -> bool {
        self.fault.is_none() && self.db.is_some()
    }

    fn status(&self) -> DatabaseStatus {
        DatabaseStatus {
            name: self.entry.name.clone(),
            encryption_state: match &self.db {
                Some(db) => match db.encryption_state() {
                    EncryptionState::Off => StateView::Off,
                    EncryptionState::On => StateView::On,
                },
                None => StateView::Unknown,
            },
            accessible: self.accessible(),
            last_error: self.fault,
        }
    }
}

/// One live server instance per data directory (enforced by a lock file).
pub struct ServerInstance {
    data_dir: PathBuf,
    machine_secret: Zeroizing<Vec<u8>>,
    certificate_password: Option<String>,
    vault: KeyVault,
    catalog: Catalog,
    slots: BTreeMap<String, Slot>,
    session: String,
    _lock: InstanceLock,
}

impl std::fmt::Debug for ServerInstance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServerInstance")
            .field("data_dir", &self.data_dir)
            .field("databases", &self.slots.len())
            .field("session", &self.session)
            .finish()
    }
}

impl ServerInstance {
    /// Open (creating on first use) the instance at `data_dir`. The service
    /// master key is created on the first ever open; every cataloged
    /// database is opened and its accessibility evaluated.
    pub fn open(data_dir: &Path, machine_secret: &[u8]) -> Result<ServerInstance, EngineError> {
        Self::open_with_certificate_password(data_dir, machine_secret, None)
    }

    /// As [`open`](Self::open), additionally supplying a password for
    /// password-protected certificate private keys encountered while opening
    /// encrypted databases.
    pub fn open_with_certificate_password(
        data_dir: &Path,
        machine_secret: &[u8],
        certificate_password: Option<&str>,
    ) -> Result<ServerInstance, EngineError> {
        fs::create_dir_all(data_dir)?;
        let lock = InstanceLock::acquire(data_dir.join(LOCK_FILE))?;
        let mut vault = KeyVault::open(&data_dir.join(KEYSTORE_FILE), machine_secret)?;
        if !vault.has_service_master_key() {
            vault.init_service_master_key()?;
        }
        let catalog = Catalog::load(&data_dir.join(CATALOG_FILE))?;

        let mut instance = ServerInstance {
            data_dir: data_dir.to_path_buf(),
            machine_secret: Zeroizing::new(machine_secret.to_vec()),
            certificate_password: certificate_password.map(str::to_string),
            vault,
            catalog,
            slots: BTreeMap::new(),
            session: MASTER_CONTEXT.to_string(),
            _lock: lock,
        };
        for entry in instance.catalog.entries().to_vec() {
            let slot = instance.open_slot(entry);
            instance.slots.insert(slot.entry.name.to_lowercase(), slot);
        }
        Ok(instance)
    }

    /// Close and reopen with the same machine secret, discarding all
    /// in-memory key material (including any certificate password supplied
    /// at open).
    pub fn restart(self) -> Result<ServerInstance, EngineError> {
        let data_dir = self.data_dir.clone();
        let machine_secret = self.machine_secret.clone();
        drop(self);
        ServerInstance::open(&data_dir, &machine_secret)
    }

    pub fn data_dir(&self) -> &Path {
        &self.data_dir
    }

    pub fn session(&self) -> &str {
        &self.session
    }

    pub fn keyvault(&self) -> &KeyVault {
        &self.vault
    }

    pub fn keyvault_mut(&mut self) -> &mut KeyVault {
        &mut self.vault
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    /// Status rows for every cataloged database, ordered by name.
    pub fn status(&self) -> Vec<DatabaseStatus> {
        self.slots.values().map(Slot::status).collect()
    }

    /// Mutable pager handle for an accessible database.
    pub fn database_mut(&mut self, name: &str) -> Result<&mut Database, EngineError> {
        let slot = self
            .slots
            .get_mut(&name.to_lowercase())
            .ok_or_else(|| EngineError::DatabaseNotFound(name.to_string()))?;
        if let Some(cause) = slot.fault {
            return Err(EngineError::DatabaseInaccessible {
                name: slot.entry.name.clone(),
                cause,
            });
        }
        slot.db.as_mut().ok_or(EngineError::DatabaseInaccessible {
            name: name.to_string(),
            cause: AccessError::BadBootRecord,
        })
    }

    /// Parse and run a script: a failed statement aborts its batch but later
    /// batches still run.
    pub fn run_script(&mut self, script: &str) -> Result<ScriptReport, ParseError> {
        let batches = tdeparser::parse_script(script)?;
        let mut outcomes = Vec::new();
        for batch in &batches {
            for statement in &batch.statements {
                match self.execute_statement(statement) {
                    Ok(result) => outcomes.push(Ok(result)),
                    Err(err) => {
                        outcomes.push(Err(err));
                        break;
                    }
                }
            }
        }
        Ok(ScriptReport { outcomes })
    }

    /// Execute one parsed statement against the instance.
    pub fn execute_statement(
        &mut self,
        statement: &Statement,
    ) -> Result<ExecutionResult, StatementError> {
        self.execute_kind(&statement.kind)
            .map(|message| ExecutionResult {
                line: statement.line,
                message,
            })
            .map_err(|error| StatementError {
                line: statement.line,
                error,
            })
    }

    fn execute_kind(&mut self, kind: &StatementKind) -> Result<String, EngineError> {
        match kind {
            StatementKind::Use { database } => self.exec_use(database),
            StatementKind::CreateDatabase {
                name,
                data_file,
                log_file,
            } => self.exec_create_database(name, data_file, log_file),
            StatementKind::CreateMasterKey { password } => {
                self.require_master_context("CREATE MASTER KEY")?;
                self.vault.create_database_master_key(password)?;
                Ok("Master key created.".to_string())
            }
            StatementKind::CreateCertificate { name, subject } => {
                self.require_master_context("CREATE CERTIFICATE")?;
                self.vault.create_certificate(name, subject)?;
                Ok(format!("Certificate '{name}' created."))
            }
            StatementKind::CreateDatabaseEncryptionKey {
                algorithm,
                certificate,
            } => self.exec_create_dek(algorithm, certificate),
            StatementKind::AlterDatabaseSetEncryption { database, on } => {
                self.exec_set_encryption(database, *on)
            }
            StatementKind::BackupCertificate {
                name,
                cert_file,
                private_key_file,
                password,
            } => {
                let cert_path = self.script_file_path(cert_file)?;
                let pvk_path = self.script_file_path(private_key_file)?;
                self.vault
                    .backup_certificate(name, &cert_path, &pvk_path, password)?;
                Ok(format!("Certificate '{name}' backed up."))
            }
            StatementKind::RestoreCertificate {
                cert_file,
                private_key_file,
                password,
            } => {
                let cert_path = self.script_file_path(cert_file)?;
                let pvk_path = self.script_file_path(private_key_file)?;
                let info = self
                    .vault
                    .restore_certificate(&cert_path, &pvk_path, password)?;
                self.refresh_accessibility();
                Ok(format!("Certificate '{}' restored.", info.name))
            }
            StatementKind::AlterCertificatePassword { name, password } => {
                self.vault
                    .alter_certificate_private_key_password(name, password)?;
                Ok(format!(
                    "Certificate '{name}' private key is now password protected."
                ))
            }
            StatementKind::BackupDatabase { database, to_file } => {
                let path = self.script_file_path(to_file)?;
                let summary = self.backup_database(database, &path)?;
                Ok(format!(
                    "Database '{}' backed up ({} pages).",
                    summary.database, summary.pages
                ))
            }
            StatementKind::RestoreDatabase { from_file } => {
                let path = self.script_file_path(from_file)?;
                let name = self.restore_database(&path)?;
                Ok(format!("Database '{name}' restored."))
            }
            StatementKind::AttachDatabase {
                data_file,
                log_file,
            } => {
                let data_path = self.script_file_path(data_file)?;
                let log_path = self.script_file_path(log_file)?;
                let name = self.attach_database(&data_path, &log_path)?;
                Ok(format!("Database '{name}' attached."))
            }
        }
    }

    fn exec_use(&mut self, database: &str) -> Result<String, EngineError> {
        let canonical = if database.eq_ignore_ascii_case(MASTER_CONTEXT) {
            MASTER_CONTEXT.to_string()
        } else {
            self.catalog
                .find(database)
                .map(|e| e.name.clone())
                .ok_or_else(|| EngineError::DatabaseNotFound(database.to_string()))?
        };
        self.session = canonical.clone();
        Ok(format!("Changed database context to '{canonical}'."))
    }

    fn exec_create_database(
        &mut self,
        name: &str,
        data_spec: &tdeparser::FileSpec,
        log_spec: &tdeparser::FileSpec,
    ) -> Result<String, EngineError> {
        if name.eq_ignore_ascii_case(MASTER_CONTEXT) || self.catalog.contains(name) {
            return Err(EngineError::DuplicateDatabaseName(name.to_string()));
        }
        let data_file = file_basename(&data_spec.filename)?;
        let log_file = file_basename(&log_spec.filename)?;
        if self.catalog.references_file(&data_file) {
            return Err(EngineError::FileInUse(data_file));
        }
        if self.catalog.references_file(&log_file) {
            return Err(EngineError::FileInUse(log_file));
        }

        let db = Database::create(
            name,
            &self.data_dir.join(&data_file),
            &self.data_dir.join(&log_file),
            file_params(data_spec),
            file_params(log_spec),
        )?;
        let entry = CatalogEntry {
            name: name.to_string(),
            data_file,
            log_file,
        };
        self.catalog.add(entry.clone());
        self.save_catalog()?;
        self.slots.insert(
            name.to_lowercase(),
            Slot {
                entry,
                db: Some(db),
                fault: None,
            },
        );
        Ok(format!("Database '{name}' created."))
    }

    fn exec_create_dek(
        &mut self,
        algorithm: &str,
        certificate: &str,
    ) -> Result<String, EngineError> {
        if self.session.eq_ignore_ascii_case(MASTER_CONTEXT) {
            return Err(EngineError::ContextError(
                "CREATE DATABASE ENCRYPTION KEY requires a user database context".to_string(),
            ));
        }
        let algorithm = DekAlgorithm::from_name(algorithm)?;
        let session = self.session.clone();
        // Existence checks before key generation: a DEK may be created only
        // once per database.
        {
            let db = self.database_mut(&session)?;
            if db.boot().has_dek() {
                return Err(PagerError::DekAlreadyExists.into());
            }
        }
        let (dek, wrapped, thumbprint) = self
            .vault
            .create_database_encryption_key(algorithm, certificate)?;
        let db = self.database_mut(&session)?;
        db.install_dek(algorithm.id(), thumbprint, wrapped)?;
        db.attach_keys(&dek);
        Ok(format!("Database encryption key created for '{session}'."))
    }

    fn exec_set_encryption(&mut self, database: &str, on: bool) -> Result<String, EngineError> {
        let name = self
            .catalog
            .find(database)
            .map(|e| e.name.clone())
            .ok_or_else(|| EngineError::DatabaseNotFound(database.to_string()))?;

        if on {
            let (has_dek, state, thumbprint, wrapped, algorithm_id) = {
                let db = self.database_mut(&name)?;
                let boot = db.boot();
                (
                    boot.has_dek(),
                    db.encryption_state(),
                    boot.certificate_thumbprint,
                    boot.wrapped_dek.clone(),
                    boot.algorithm_id,
                )
            };
            if !has_dek {
                return Err(PagerError::NoDekCreated.into());
            }
            if state == EncryptionState::On {
                return Ok(format!(
                    "Warning: encryption is already ON for '{name}'; no changes made."
                ));
            }
            let algorithm = DekAlgorithm::from_id(algorithm_id).unwrap_or(DekAlgorithm::Aes128);
            let dek = self.vault.unwrap_dek(
                &thumbprint,
                &wrapped,
                algorithm,
                self.certificate_password.as_deref(),
            )?;
            let report = self.database_mut(&name)?.set_encryption_on(&dek)?;
            Ok(format!(
                "Encryption ON for '{name}': {} pages, {} log records converted.",
                report.pages_converted, report.log_records_converted
            ))
        } else {
            let report = self.database_mut(&name)?.set_encryption_off()?;
            Ok(format!(
                "Encryption OFF for '{name}': {} pages, {} log records converted.",
                report.pages_converted, report.log_records_converted
            ))
        }
    }

    /// Back up a database to an image file. Works without any key material;
    /// pages are copied verbatim.
    pub fn backup_database(
        &mut self,
        name: &str,
        to_path: &Path,
    ) -> Result<BackupSummary, EngineError> {
        let slot = self
            .slots
            .get_mut(&name.to_lowercase())
            .ok_or_else(|| EngineError::DatabaseNotFound(name.to_string()))?;
        let db = slot.db.as_mut().ok_or(EngineError::DatabaseInaccessible {
            name: name.to_string(),
            cause: AccessError::BadBootRecord,
        })?;
        Ok(backup::write_image(db, to_path)?)
    }

    /// Restore a database from an image file. The catalog entry is added and
    /// accessibility evaluated exactly as at instance open: an encrypted
    /// database without its certificate restores but stays inaccessible.
    pub fn restore_database(&mut self, from_path: &Path) -> Result<String, EngineError> {
        let image = backup::read_image(from_path)?;
        let name = image.name.clone();
        if name.eq_ignore_ascii_case(MASTER_CONTEXT) || self.catalog.contains(&name) {
            return Err(EngineError::DuplicateDatabaseName(name));
        }
        let data_file = format!("{}.mdf", name.to_lowercase());
        let log_file = format!("{}.ldf", name.to_lowercase());
        if self.catalog.references_file(&data_file) || self.catalog.references_file(&log_file) {
            return Err(EngineError::FileInUse(data_file));
        }
        backup::materialize(
            &image,
            &self.data_dir.join(&data_file),
            &self.data_dir.join(&log_file),
        )?;
        let entry = CatalogEntry {
            name: name.clone(),
            data_file,
            log_file,
        };
        self.catalog.add(entry.clone());
        self.save_catalog()?;
        let slot = self.open_slot(entry);
        self.slots.insert(name.to_lowercase(), slot);
        Ok(name)
    }

    /// Attach existing database files. Files outside the instance directory
    /// are copied in; the database name comes from the boot record.
    pub fn attach_database(
        &mut self,
        data_path: &Path,
        log_path: &Path,
    ) -> Result<String, EngineError> {
        let data_file = path_basename(data_path)?;
        let log_file = path_basename(log_path)?;
        let target_data = self.data_dir.join(&data_file);
        let target_log = self.data_dir.join(&log_file);
        for (source, target) in [(data_path, &target_data), (log_path, &target_log)] {
            if source != target.as_path() {
                if target.exists() {
                    return Err(EngineError::FileInUse(path_basename(target)?));
                }
                fs::copy(source, target)?;
            }
        }

        // The boot record must parse before anything is cataloged.
        let db = Database::open(&target_data, &target_log)?;
        let name = db.name().to_string();
        if name.eq_ignore_ascii_case(MASTER_CONTEXT) || self.catalog.contains(&name) {
            return Err(EngineError::DuplicateDatabaseName(name));
        }
        if self.catalog.references_file(&data_file) || self.catalog.references_file(&log_file) {
            return Err(EngineError::FileInUse(data_file));
        }
        let entry = CatalogEntry {
            name: name.clone(),
            data_file,
            log_file,
        };
        self.catalog.add(entry.clone());
        self.save_catalog()?;
        let slot = self.evaluate_slot(entry, db);
        self.slots.insert(name.to_lowercase(), slot);
        Ok(name)
    }

    /// Remove a database from the catalog, leaving its files in place.
    pub fn detach_database(&mut self, name: &str) -> Result<CatalogEntry, EngineError> {
        let entry = self
            .catalog
            .remove(name)
            .ok_or_else(|| EngineError::DatabaseNotFound(name.to_string()))?;
        self.slots.remove(&name.to_lowercase());
        self.save_catalog()?;
        Ok(entry)
    }

    /// Re-evaluate accessibility of faulted databases (after a certificate
    /// restore, for example).
    pub fn refresh_accessibility(&mut self) {
        let faulted: Vec<String> = self
            .slots
            .values()
            .filter(|s| s.fault.is_some())
            .map(|s| s.entry.name.to_lowercase())
            .collect();
        for key in faulted {
            if let Some(slot) = self.slots.remove(&key) {
                let reopened = match slot.db {
                    Some(db) => self.evaluate_slot(slot.entry, db),
                    None => self.open_slot(slot.entry),
                };
                self.slots.insert(key, reopened);
            }
        }
    }

    fn open_slot(&self, entry: CatalogEntry) -> Slot {
        let data_path = self.data_dir.join(&entry.data_file);
        let log_path = self.data_dir.join(&entry.log_file);
        match Database::open(&data_path, &log_path) {
            Ok(db) => self.evaluate_slot(entry, db),
            Err(err) => Slot {
                entry,
                db: None,
                fault: Some(pager_fault(&err)),
            },
        }
    }

    fn evaluate_slot(&self, entry: CatalogEntry, mut db: Database) -> Slot {
        let fault = if db.encryption_state() == EncryptionState::On {
            let boot = db.boot();
            let algorithm =
                DekAlgorithm::from_id(boot.algorithm_id).unwrap_or(DekAlgorithm::Aes128);
            match self.vault.unwrap_dek(
                &boot.certificate_thumbprint,
                &boot.wrapped_dek.clone(),
                algorithm,
                self.certificate_password.as_deref(),
            ) {
                Ok(dek) => {
                    db.attach_keys(&dek);
                    None
                }
                Err(err) => Some(vault_fault(&err)),
            }
        } else {
            None
        };
        Slot {
            entry,
            db: Some(db),
            fault,
        }
    }

    fn require_master_context(&self, what: &str) -> Result<(), EngineError> {
        if self.session.eq_ignore_ascii_case(MASTER_CONTEXT) {
            Ok(())
        } else {
            Err(EngineError::ContextError(format!(
                "{what} must run in the master context"
            )))
        }
    }

    /// Script-supplied paths are opaque text mapped into the instance
    /// directory by basename, so listings with absolute paths from another
    /// machine run unchanged.
    fn script_file_path(&self, path_text: &str) -> Result<PathBuf, EngineError> {
        Ok(self.data_dir.join(file_basename(path_text)?))
    }

    fn save_catalog(&self) -> Result<(), EngineError> {
        self.catalog.save(&self.data_dir.join(CATALOG_FILE))?;
        Ok(())
    }
}

fn file_params(spec: &tdeparser::FileSpec) -> FileParams {
    FileParams {
        size: spec.size.bytes(),
        maxsize: spec.maxsize.bytes(),
        growth: spec.filegrowth.bytes(),
    }
}

fn file_basename(path_text: &str) -> Result<String, EngineError> {
    let base = path_text
        .rsplit(['\\', '/'])
        .next()
        .unwrap_or("")
        .trim()
        .to_string();
    if base.is_empty() || base == "." || base == ".." {
        return Err(EngineError::BadPath(path_text.to_string()));
    }
    Ok(base)
}

fn path_basename(path: &Path) -> Result<String, EngineError> {
    path.file_name()
        .and_then(|n| n.to_str())
        .map(str::to_string)
        .ok_or_else(|| EngineError::BadPath(path.display().to_string()))
}
