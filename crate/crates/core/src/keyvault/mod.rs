//! The instance key hierarchy.
//!
//! Chain of custody, top to bottom:
//!
//! 1. machine secret → PBKDF2 → machine key (16 bytes)
//! 2. machine key wraps the *service master key* (SMK, 32 bytes, one per
//!    instance)
//! 3. SMK wraps the *database master key* (DMK, 32 bytes); a password wraps a
//!    second copy so the DMK survives SMK loss
//! 4. DMK wraps certificate private keys (RSA-2048)
//! 5. a certificate public key wraps each *database encryption key* (DEK,
//!    AES-128); the wrapped DEK lives in the owning database's boot record,
//!    never here
//!
//! Removing any link makes everything below it unrecoverable, and each
//! missing link surfaces as its own error so callers can tell which link
//! broke.
//!
//! Persisted as `master.keystore`: header (magic, version, instance salt)
//! followed by length-prefixed records. All mutations rewrite the file
//! atomically via a temp file and rename.

mod blob;

pub use blob::{BlobError, WrapScheme, WrappedBlob};

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use rsa::traits::{PrivateKeyParts, PublicKeyParts};
use rsa::{BigUint, RsaPrivateKey, RsaPublicKey};
use thiserror::Error;
use zeroize::Zeroizing;

use crate::crypto;
use crate::wire::{Reader, Writer};

const KEYSTORE_MAGIC: &[u8] = b"TDEKEYS1";
const CERT_FILE_MAGIC: &[u8] = b"TDECERT1";
const PVK_FILE_MAGIC: &[u8] = b"TDEPVK1";
const STORE_VERSION: u32 = 1;

const RECORD_SMK: u8 = 1;
const RECORD_DMK: u8 = 2;
const RECORD_CERTIFICATE: u8 = 3;

const BACKUP_RECORD_PUBLIC: u8 = 1;
const BACKUP_RECORD_PRIVATE: u8 = 2;

const RSA_BITS: usize = 2048;

#[derive(Debug, Error)]
pub enum KeyVaultError {
    #[error("service master key already initialized")]
    AlreadyInitialized,
    #[error("machine secret must be at least 16 bytes")]
    WeakMachineSecret,
    #[error("machine secret does not match this key store")]
    MachineSecretMismatch,
    #[error("no service master key in this key store")]
    NoServiceMasterKey,
    #[error("database master key already exists")]
    DmkAlreadyExists,
    #[error("password must not be empty")]
    EmptyPassword,
    #[error("no database master key in this key store")]
    NoDatabaseMasterKey,
    #[error("decryption failed")]
    DecryptFailed,
    #[error("certificate name already in use: {0}")]
    DuplicateCertificateName(String),
    #[error("certificate not found: {0}")]
    CertificateNotFound(String),
    #[error("unsupported encryption algorithm: {0}")]
    UnsupportedAlgorithm(String),
    #[error("certificate private key is password protected and locked")]
    PrivateKeyLocked,
    #[error("wrong password for certificate backup")]
    BadPassword,
    #[error("corrupt certificate backup file: {0}")]
    CorruptBackupFile(String),
    #[error("corrupt key store: {0}")]
    CorruptKeyStore(String),
    #[error("key generation failed: {0}")]
    KeyGeneration(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// First 20 bytes of SHA-256 over a certificate's canonical public key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Thumbprint(pub [u8; 20]);

impl std::fmt::Display for Thumbprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", hex::encode(self.0))
    }
}

/// How a certificate's private key is wrapped at rest.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrivateKeyProtection {
    ByDmk,
    ByPassword,
}

impl PrivateKeyProtection {
    fn to_id(self) -> u8 {
        match self {
            PrivateKeyProtection::ByDmk => 1,
            PrivateKeyProtection::ByPassword => 2,
        }
    }

    fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(PrivateKeyProtection::ByDmk),
            2 => Some(PrivateKeyProtection::ByPassword),
            _ => None,
        }
    }
}

/// Page-encryption algorithm for a database encryption key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DekAlgorithm {
    Aes128,
}

impl DekAlgorithm {
    pub fn id(self) -> u8 {
        match self {
            DekAlgorithm::Aes128 => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(DekAlgorithm::Aes128),
            _ => None,
        }
    }

    /// Map a DDL algorithm name; only AES_128 is supported.
    pub fn from_name(name: &str) -> Result<Self, KeyVaultError> {
        if name.eq_ignore_ascii_case("AES_128") {
            Ok(DekAlgorithm::Aes128)
        } else {
            Err(KeyVaultError::UnsupportedAlgorithm(name.to_string()))
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DekAlgorithm::Aes128 => "AES_128",
        }
    }
}

/// An unwrapped database encryption key, held in memory only.
#[derive(Clone)]
pub struct DatabaseEncryptionKey {
    algorithm: DekAlgorithm,
    key: Zeroizing<[u8; 16]>,
}

impl DatabaseEncryptionKey {
    pub fn from_bytes(algorithm: DekAlgorithm, key: [u8; 16]) -> Self {
        DatabaseEncryptionKey {
            algorithm,
            key: Zeroizing::new(key),
        }
    }

    pub fn algorithm(&self) -> DekAlgorithm {
        self.algorithm
    }

    pub fn bytes(&self) -> &[u8; 16] {
        &self.key
    }
}

impl std::fmt::Debug for DatabaseEncryptionKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("DatabaseEncryptionKey")
            .field("algorithm", &self.algorithm)
            .field("key", &"<redacted>")
            .finish()
    }
}

/// Public description of a stored certificate.
#[derive(Debug, Clone)]
pub struct CertificateInfo {
    pub name: String,
    pub subject: String,
    pub thumbprint: Thumbprint,
    pub protection: PrivateKeyProtection,
    pub created_at: u64,
}

struct SmkRecord {
    created_at: u64,
    wrapped: WrappedBlob,
}

struct DmkRecord {
    wrapped_by_smk: WrappedBlob,
    wrapped_by_password: WrappedBlob,
}

struct CertificateRecord {
    name: String,
    subject: String,
    public_key: RsaPublicKey,
    private_key_wrapped: WrappedBlob,
    protection: PrivateKeyProtection,
    thumbprint: Thumbprint,
    created_at: u64,
}

impl CertificateRecord {
    fn info(&self) -> CertificateInfo {
        CertificateInfo {
            name: self.name.clone(),
            subject: self.subject.clone(),
            thumbprint: self.thumbprint,
            protection: self.protection,
            created_at: self.created_at,
        }
    }
}

/// Length-prefixed big-endian (n, e): the canonical public key bytes hashed
/// into the thumbprint and written to certificate backup files.
pub fn canonical_public_key(key: &RsaPublicKey) -> Vec<u8> {
    let mut w = Writer::new();
    w.lp_bytes(&key.n().to_bytes_be());
    w.lp_bytes(&key.e().to_bytes_be());
    w.into_inner()
}

/// Thumbprint = first 20 bytes of SHA-256 over [`canonical_public_key`].
pub fn thumbprint_of(key: &RsaPublicKey) -> Thumbprint {
    let digest = crypto::sha256(&[&canonical_public_key(key)]);
    Thumbprint(digest[..20].try_into().unwrap())
}

fn canonical_private_key(key: &RsaPrivateKey) -> Zeroizing<Vec<u8>> {
    let mut w = Writer::new();
    w.lp_bytes(&key.n().to_bytes_be());
    w.lp_bytes(&key.e().to_bytes_be());
    w.lp_bytes(&key.d().to_bytes_be());
    w.u32(key.primes().len() as u32);
    for prime in key.primes() {
        w.lp_bytes(&prime.to_bytes_be());
    }
    Zeroizing::new(w.into_inner())
}

fn private_key_from_canonical(bytes: &[u8]) -> Result<RsaPrivateKey, KeyVaultError> {
    let corrupt = |m: &str| KeyVaultError::CorruptBackupFile(m.to_string());
    let mut r = Reader::new(bytes);
    let n = BigUint::from_bytes_be(r.lp_bytes().map_err(|e| corrupt(&e.to_string()))?);
    let e = BigUint::from_bytes_be(r.lp_bytes().map_err(|e| corrupt(&e.to_string()))?);
    let d = BigUint::from_bytes_be(r.lp_bytes().map_err(|e| corrupt(&e.to_string()))?);
    let count = r.u32().map_err(|e| corrupt(&e.to_string()))? as usize;
    if count > 8 {
        return Err(corrupt("implausible prime count"));
    }
    let mut primes = Vec::with_capacity(count);
    for _ in 0..count {
        primes.push(BigUint::from_bytes_be(
            r.lp_bytes().map_err(|e| corrupt(&e.to_string()))?,
        ));
    }
    if !r.is_empty() {
        return Err(corrupt("trailing bytes in private key"));
    }
    let mut key = RsaPrivateKey::from_components(n, e, d, primes)
        .map_err(|_| corrupt("invalid private key components"))?;
    let _ = key.precompute();
    Ok(key)
}

fn now_secs() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// The master key store: service master key, database master key, and
/// certificates, persisted wrapped in `master.keystore`.
pub struct KeyVault {
    path: PathBuf,
    instance_salt: [u8; 16],
    machine_key: Zeroizing<[u8; 16]>,
    smk: Option<SmkRecord>,
    smk_key: Option<Zeroizing<[u8; 32]>>,
    dmk: Option<DmkRecord>,
    certificates: Vec<CertificateRecord>,
    dek_unwraps: AtomicU64,
}

impl std::fmt::Debug for KeyVault {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("KeyVault")
            .field("path", &self.path)
            .field("smk", &self.smk.is_some())
            .field("dmk", &self.dmk.is_some())
            .field("certificates", &self.certificates.len())
            .finish()
    }
}

impl KeyVault {
    /// Open (or create) the key store at `path` using `machine_secret`.
    ///
    /// A store whose service master key does not unwrap under the derived
    /// machine key fails with `MachineSecretMismatch`.
    pub fn open(path: &Path, machine_secret: &[u8]) -> Result<KeyVault, KeyVaultError> {
        if machine_secret.len() < 16 {
            return Err(KeyVaultError::WeakMachineSecret);
        }
        if !path.exists() {
            let instance_salt = crypto::random_array::<16>();
            let machine_key = Zeroizing::new(crypto::pbkdf2_key16(machine_secret, &instance_salt));
            let vault = KeyVault {
                path: path.to_path_buf(),
                instance_salt,
                machine_key,
                smk: None,
                smk_key: None,
                dmk: None,
                certificates: Vec::new(),
                dek_unwraps: AtomicU64::new(0),
            };
            vault.persist()?;
            return Ok(vault);
        }

        let bytes = fs::read(path)?;
        let mut vault = Self::parse(path.to_path_buf(), &bytes)?;
        vault.machine_key =
            Zeroizing::new(crypto::pbkdf2_key16(machine_secret, &vault.instance_salt));
        if let Some(smk) = &vault.smk {
            let raw = smk
                .wrapped
                .unwrap_symmetric(&vault.machine_key[..])
                .map_err(|_| KeyVaultError::MachineSecretMismatch)?;
            let raw: [u8; 32] = raw
                .try_into()
                .map_err(|_| KeyVaultError::CorruptKeyStore("bad SMK length".into()))?;
            vault.smk_key = Some(Zeroizing::new(raw));
        }
        Ok(vault)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn has_service_master_key(&self) -> bool {
        self.smk.is_some()
    }

    pub fn has_database_master_key(&self) -> bool {
        self.dmk.is_some()
    }

    /// Number of DEK unwrap attempts since this vault was opened. Backup
    /// paths are required to leave this untouched.
    pub fn dek_unwrap_count(&self) -> u64 {
        self.dek_unwraps.load(Ordering::Relaxed)
    }

    /// Generate the service master key and persist it wrapped under the
    /// machine key. One per store, ever.
    pub fn init_service_master_key(&mut self) -> Result<(), KeyVaultError> {
        if self.smk.is_some() {
            return Err(KeyVaultError::AlreadyInitialized);
        }
        let raw = crypto::random_array::<32>();
        let wrapped = WrappedBlob::wrap_symmetric(&self.machine_key[..], &raw);
        self.smk = Some(SmkRecord {
            created_at: now_secs(),
            wrapped,
        });
        self.smk_key = Some(Zeroizing::new(raw));
        self.persist()
    }

    /// Create the database master key, wrapped both by the SMK and by
    /// `password`.
    pub fn create_database_master_key(&mut self, password: &str) -> Result<(), KeyVaultError> {
        if password.is_empty() {
            return Err(KeyVaultError::EmptyPassword);
        }
        let smk = self
            .smk_key
            .as_ref()
            .ok_or(KeyVaultError::NoServiceMasterKey)?;
        if self.dmk.is_some() {
            return Err(KeyVaultError::DmkAlreadyExists);
        }
        let raw = Zeroizing::new(crypto::random_array::<32>());
        self.dmk = Some(DmkRecord {
            wrapped_by_smk: WrappedBlob::wrap_symmetric(&smk[..], &raw[..]),
            wrapped_by_password: WrappedBlob::wrap_password(password, &raw[..]),
        });
        self.persist()
    }

    /// Recover the database master key. The SMK path is preferred; the
    /// password path is the fallback when the SMK is unavailable.
    pub fn open_database_master_key(
        &self,
        password: Option<&str>,
    ) -> Result<Zeroizing<[u8; 32]>, KeyVaultError> {
        let dmk = self
            .dmk
            .as_ref()
            .ok_or(KeyVaultError::NoDatabaseMasterKey)?;
        if let Some(smk) = &self.smk_key {
            if let Ok(raw) = dmk.wrapped_by_smk.unwrap_symmetric(&smk[..]) {
                if let Ok(raw) = <[u8; 32]>::try_from(raw) {
                    return Ok(Zeroizing::new(raw));
                }
            }
        }
        if let Some(password) = password {
            if let Ok(raw) = dmk.wrapped_by_password.unwrap_password(password) {
                if let Ok(raw) = <[u8; 32]>::try_from(raw) {
                    return Ok(Zeroizing::new(raw));
                }
            }
        }
        Err(KeyVaultError::DecryptFailed)
    }

    /// Generate an RSA-2048 certificate whose private key is wrapped by the
    /// database master key.
    pub fn create_certificate(
        &mut self,
        name: &str,
        subject: &str,
    ) -> Result<CertificateInfo, KeyVaultError> {
        if self.find_certificate(name).is_some() {
            return Err(KeyVaultError::DuplicateCertificateName(name.to_string()));
        }
        let dmk = self.open_database_master_key(None).map_err(|e| match e {
            KeyVaultError::DecryptFailed => KeyVaultError::NoDatabaseMasterKey,
            other => other,
        })?;
        let private_key = RsaPrivateKey::new(&mut rand::rngs::OsRng, RSA_BITS)
            .map_err(|e| KeyVaultError::KeyGeneration(e.to_string()))?;
        let public_key = RsaPublicKey::from(&private_key);
        let record = CertificateRecord {
            name: name.to_string(),
            subject: subject.to_string(),
            thumbprint: thumbprint_of(&public_key),
            private_key_wrapped: WrappedBlob::wrap_symmetric(
                &dmk[..],
                &canonical_private_key(&private_key),
            ),
            protection: PrivateKeyProtection::ByDmk,
            public_key,
            created_at: now_secs(),
        };
        let info = record.info();
        self.certificates.push(record);
        self.persist()?;
        Ok(info)
    }

    pub fn certificate(&self, name: &str) -> Option<CertificateInfo> {
        self.find_certificate(name).map(CertificateRecord::info)
    }

    pub fn certificate_by_thumbprint(&self, thumbprint: &Thumbprint) -> Option<CertificateInfo> {
        self.certificates
            .iter()
            .find(|c| &c.thumbprint == thumbprint)
            .map(CertificateRecord::info)
    }

    pub fn list_certificates(&self) -> Vec<CertificateInfo> {
        self.certificates
            .iter()
            .map(CertificateRecord::info)
            .collect()
    }

    /// Generate a fresh DEK wrapped under the named certificate's public key.
    /// Returns the key, the encoded wrapped blob for the boot record, and the
    /// certificate thumbprint.
    pub fn create_database_encryption_key(
        &self,
        algorithm: DekAlgorithm,
        certificate_name: &str,
    ) -> Result<(DatabaseEncryptionKey, Vec<u8>, Thumbprint), KeyVaultError> {
        let record = self
            .find_certificate(certificate_name)
            .ok_or_else(|| KeyVaultError::CertificateNotFound(certificate_name.to_string()))?;
        // The private key must be openable now, or the database could never
        // be recovered once encrypted.
        self.open_private_key(record, None)?;
        let raw = crypto::random_array::<16>();
        let wrapped = WrappedBlob::wrap_rsa(&record.public_key, &raw)
            .map_err(|_| KeyVaultError::DecryptFailed)?;
        Ok((
            DatabaseEncryptionKey::from_bytes(algorithm, raw),
            wrapped.encode(),
            record.thumbprint,
        ))
    }

    /// Recover a DEK from its boot-record fields: certificate thumbprint plus
    /// the encoded wrapped blob. `password` unlocks password-protected
    /// certificate private keys.
    pub fn unwrap_dek(
        &self,
        thumbprint: &Thumbprint,
        wrapped_dek: &[u8],
        algorithm: DekAlgorithm,
        password: Option<&str>,
    ) -> Result<DatabaseEncryptionKey, KeyVaultError> {
        self.dek_unwraps.fetch_add(1, Ordering::Relaxed);
        let record = self
            .certificates
            .iter()
            .find(|c| &c.thumbprint == thumbprint)
            .ok_or_else(|| KeyVaultError::CertificateNotFound(thumbprint.to_string()))?;
        let private_key = self.open_private_key(record, password)?;
        let blob = WrappedBlob::decode(wrapped_dek).map_err(|_| KeyVaultError::DecryptFailed)?;
        let raw = blob
            .unwrap_rsa(&private_key)
            .map_err(|_| KeyVaultError::DecryptFailed)?;
        let raw: [u8; 16] = raw.try_into().map_err(|_| KeyVaultError::DecryptFailed)?;
        Ok(DatabaseEncryptionKey::from_bytes(algorithm, raw))
    }

    /// Export a certificate: public part to `cert_path`, private key
    /// re-wrapped under `password` to `private_key_path`.
    pub fn backup_certificate(
        &self,
        name: &str,
        cert_path: &Path,
        private_key_path: &Path,
        password: &str,
    ) -> Result<CertificateInfo, KeyVaultError> {
        if password.is_empty() {
            return Err(KeyVaultError::EmptyPassword);
        }
        let record = self
            .find_certificate(name)
            .ok_or_else(|| KeyVaultError::CertificateNotFound(name.to_string()))?;
        let private_key = self.open_private_key(record, Some(password))?;

        let mut body = Writer::new();
        body.lp_string(&record.name);
        body.lp_string(&record.subject);
        body.lp_bytes(&record.public_key.n().to_bytes_be());
        body.lp_bytes(&record.public_key.e().to_bytes_be());
        body.bytes(&record.thumbprint.0);
        body.u64(record.created_at);
        let mut cert_file = Writer::new();
        cert_file.bytes(CERT_FILE_MAGIC);
        cert_file.u32(STORE_VERSION);
        cert_file.u8(BACKUP_RECORD_PUBLIC);
        cert_file.lp_bytes(&body.into_inner());

        let wrapped = WrappedBlob::wrap_password(password, &canonical_private_key(&private_key));
        let mut pvk_body = Writer::new();
        pvk_body.bytes(&record.thumbprint.0);
        pvk_body.lp_bytes(&wrapped.encode());
        let mut pvk_file = Writer::new();
        pvk_file.bytes(PVK_FILE_MAGIC);
        pvk_file.u32(STORE_VERSION);
        pvk_file.u8(BACKUP_RECORD_PRIVATE);
        pvk_file.lp_bytes(&pvk_body.into_inner());

        fs::write(cert_path, cert_file.into_inner())?;
        fs::write(private_key_path, pvk_file.into_inner())?;
        Ok(record.info())
    }

    /// Install a certificate from backup files under its original name,
    /// re-wrapped under this store's database master key.
    pub fn restore_certificate(
        &mut self,
        cert_path: &Path,
        private_key_path: &Path,
        password: &str,
    ) -> Result<CertificateInfo, KeyVaultError> {
        let corrupt = |m: &str| KeyVaultError::CorruptBackupFile(m.to_string());

        let cert_bytes = fs::read(cert_path)?;
        let mut r = Reader::new(&cert_bytes);
        r.expect_magic(CERT_FILE_MAGIC)
            .map_err(|_| corrupt("bad certificate file magic"))?;
        let version = r.u32().map_err(|e| corrupt(&e.to_string()))?;
        if version != STORE_VERSION {
            return Err(corrupt("unsupported certificate file version"));
        }
        let record_type = r.u8().map_err(|e| corrupt(&e.to_string()))?;
        if record_type != BACKUP_RECORD_PUBLIC {
            return Err(corrupt("unexpected record type in certificate file"));
        }
        let body = r.lp_bytes().map_err(|e| corrupt(&e.to_string()))?;
        if !r.is_empty() {
            return Err(corrupt("trailing bytes in certificate file"));
        }
        let mut b = Reader::new(body);
        let name = b.lp_string().map_err(|e| corrupt(&e.to_string()))?;
        let subject = b.lp_string().map_err(|e| corrupt(&e.to_string()))?;
        let n = BigUint::from_bytes_be(b.lp_bytes().map_err(|e| corrupt(&e.to_string()))?);
        let e = BigUint::from_bytes_be(b.lp_bytes().map_err(|e| corrupt(&e.to_string()))?);
        let thumbprint = Thumbprint(b.array::<20>().map_err(|e| corrupt(&e.to_string()))?);
        let created_at = b.u64().map_err(|e| corrupt(&e.to_string()))?;
        if !b.is_empty() {
            return Err(corrupt("trailing bytes in certificate record"));
        }
        let public_key =
            RsaPublicKey::new(n, e).map_err(|_| corrupt("invalid public key components"))?;
        if thumbprint_of(&public_key) != thumbprint {
            return Err(corrupt("thumbprint does not match public key"));
        }

        let pvk_bytes = fs::read(private_key_path)?;
        let mut r = Reader::new(&pvk_bytes);
        r.expect_magic(PVK_FILE_MAGIC)
            .map_err(|_| corrupt("bad private key file magic"))?;
        let version = r.u32().map_err(|e| corrupt(&e.to_string()))?;
        if version != STORE_VERSION {
            return Err(corrupt("unsupported private key file version"));
        }
        let record_type = r.u8().map_err(|e| corrupt(&e.to_string()))?;
        if record_type != BACKUP_RECORD_PRIVATE {
            return Err(corrupt("unexpected record type in private key file"));
        }
        let body = r.lp_bytes().map_err(|e| corrupt(&e.to_string()))?;
        if !r.is_empty() {
            return Err(corrupt("trailing bytes in private key file"));
        }
        let mut b = Reader::new(body);
        let pvk_thumbprint = Thumbprint(b.array::<20>().map_err(|e| corrupt(&e.to_string()))?);
        let blob_bytes = b.lp_bytes().map_err(|e| corrupt(&e.to_string()))?;
        if !b.is_empty() {
            return Err(corrupt("trailing bytes in private key record"));
        }
        if pvk_thumbprint != thumbprint {
            return Err(corrupt("certificate and private key files do not match"));
        }
        let blob =
            WrappedBlob::decode(blob_bytes).map_err(|e| corrupt(&format!("bad blob: {e}")))?;
        let canonical = Zeroizing::new(
            blob.unwrap_password(password)
                .map_err(|_| KeyVaultError::BadPassword)?,
        );
        let private_key = private_key_from_canonical(&canonical)?;
        if RsaPublicKey::from(&private_key) != public_key {
            return Err(corrupt("private key does not match certificate"));
        }

        if self.find_certificate(&name).is_some() {
            return Err(KeyVaultError::DuplicateCertificateName(name));
        }
        let dmk = self.open_database_master_key(None).map_err(|e| match e {
            KeyVaultError::DecryptFailed => KeyVaultError::NoDatabaseMasterKey,
            other => other,
        })?;
        let record = CertificateRecord {
            name,
            subject,
            thumbprint,
            private_key_wrapped: WrappedBlob::wrap_symmetric(&dmk[..], &canonical),
            protection: PrivateKeyProtection::ByDmk,
            public_key,
            created_at,
        };
        let info = record.info();
        self.certificates.push(record);
        self.persist()?;
        Ok(info)
    }

    /// Re-wrap a certificate's private key under `password`, removing the DMK
    /// wrapping. After this, unwrapping the private key requires the password
    /// — which is exactly what makes an encrypted database unopenable after a
    /// restart.
    pub fn alter_certificate_private_key_password(
        &mut self,
        name: &str,
        password: &str,
    ) -> Result<CertificateInfo, KeyVaultError> {
        if password.is_empty() {
            return Err(KeyVaultError::EmptyPassword);
        }
        let record = self
            .find_certificate(name)
            .ok_or_else(|| KeyVaultError::CertificateNotFound(name.to_string()))?;
        let private_key = self.open_private_key(record, None)?;
        let wrapped = WrappedBlob::wrap_password(password, &canonical_private_key(&private_key));
        let record = self
            .certificates
            .iter_mut()
            .find(|c| c.name.eq_ignore_ascii_case(name))
            .expect("looked up above");
        record.private_key_wrapped = wrapped;
        record.protection = PrivateKeyProtection::ByPassword;
        let info = record.info();
        self.persist()?;
        Ok(info)
    }

    /// Remove the service master key record. Manual store surgery, used to
    /// demonstrate chain severance.
    pub fn delete_service_master_key(&mut self) -> Result<(), KeyVaultError> {
        if self.smk.take().is_none() {
            return Err(KeyVaultError::NoServiceMasterKey);
        }
        self.smk_key = None;
        self.persist()
    }

    /// Remove the database master key record. Manual store surgery.
    pub fn delete_database_master_key(&mut self) -> Result<(), KeyVaultError> {
        if self.dmk.take().is_none() {
            return Err(KeyVaultError::NoDatabaseMasterKey);
        }
        self.persist()
    }

    /// Remove a certificate. Manual store surgery.
    pub fn delete_certificate(&mut self, name: &str) -> Result<(), KeyVaultError> {
        let before = self.certificates.len();
        self.certificates
            .retain(|c| !c.name.eq_ignore_ascii_case(name));
        if self.certificates.len() == before {
            return Err(KeyVaultError::CertificateNotFound(name.to_string()));
        }
        self.persist()
    }

    fn find_certificate(&self, name: &str) -> Option<&CertificateRecord> {
        self.certificates
            .iter()
            .find(|c| c.name.eq_ignore_ascii_case(name))
    }

    fn open_private_key(
        &self,
        record: &CertificateRecord,
        password: Option<&str>,
    ) -> Result<RsaPrivateKey, KeyVaultError> {
        let canonical = match record.protection {
            PrivateKeyProtection::ByDmk => {
                let dmk = self.open_database_master_key(None)?;
                Zeroizing::new(
                    record
                        .private_key_wrapped
                        .unwrap_symmetric(&dmk[..])
                        .map_err(|_| KeyVaultError::DecryptFailed)?,
                )
            }
            PrivateKeyProtection::ByPassword => {
                let password = password.ok_or(KeyVaultError::PrivateKeyLocked)?;
                Zeroizing::new(
                    record
                        .private_key_wrapped
                        .unwrap_password(password)
                        .map_err(|_| KeyVaultError::PrivateKeyLocked)?,
                )
            }
        };
        private_key_from_canonical(&canonical).map_err(|_| KeyVaultError::DecryptFailed)
    }

    fn persist(&self) -> Result<(), KeyVaultError> {
        let mut w = Writer::new();
        w.bytes(KEYSTORE_MAGIC);
        w.u32(STORE_VERSION);
        w.bytes(&self.instance_salt);
        if let Some(smk) = &self.smk {
            let mut body = Writer::new();
            body.u64(smk.created_at);
            body.bytes(&smk.wrapped.encode());
            w.u8(RECORD_SMK);
            w.lp_bytes(&body.into_inner());
        }
        if let Some(dmk) = &self.dmk {
            let mut body = Writer::new();
            body.lp_bytes(&dmk.wrapped_by_smk.encode());
            body.lp_bytes(&dmk.wrapped_by_password.encode());
            w.u8(RECORD_DMK);
            w.lp_bytes(&body.into_inner());
        }
        for cert in &self.certificates {
            let mut body = Writer::new();
            body.lp_string(&cert.name);
            body.lp_string(&cert.subject);
            body.lp_bytes(&cert.public_key.n().to_bytes_be());
            body.lp_bytes(&cert.public_key.e().to_bytes_be());
            body.u8(cert.protection.to_id());
            body.bytes(&cert.thumbprint.0);
            body.u64(cert.created_at);
            body.lp_bytes(&cert.private_key_wrapped.encode());
            w.u8(RECORD_CERTIFICATE);
            w.lp_bytes(&body.into_inner());
        }

        let tmp = self.path.with_extension("tmp");
        let mut file = fs::File::create(&tmp)?;
        file.write_all(&w.into_inner())?;
        file.sync_all()?;
        fs::rename(&tmp, &self.path)?;
        Ok(())
    }

    fn parse(path: PathBuf, bytes: &[u8]) -> Result<KeyVault, KeyVaultError> {
        let corrupt = |m: String| KeyVaultError::CorruptKeyStore(m);
        let mut r = Reader::new(bytes);
        r.expect_magic(KEYSTORE_MAGIC)
            .map_err(|_| corrupt("bad magic".into()))?;
        let version = r.u32().map_err(|e| corrupt(e.to_string()))?;
        if version != STORE_VERSION {
            return Err(corrupt(format!("unsupported version {version}")));
        }
        let instance_salt = r.array::<16>().map_err(|e| corrupt(e.to_string()))?;

        let mut vault = KeyVault {
            path,
            instance_salt,
            machine_key: Zeroizing::new([0u8; 16]),
            smk: None,
            smk_key: None,
            dmk: None,
            certificates: Vec::new(),
            dek_unwraps: AtomicU64::new(0),
        };

        while !r.is_empty() {
            let record_type = r.u8().map_err(|e| corrupt(e.to_string()))?;
            let body = r.lp_bytes().map_err(|e| corrupt(e.to_string()))?;
            let mut b = Reader::new(body);
            match record_type {
                RECORD_SMK => {
                    let created_at = b.u64().map_err(|e| corrupt(e.to_string()))?;
                    let wrapped = WrappedBlob::decode_from(&mut b)
                        .map_err(|e| corrupt(format!("SMK record: {e}")))?;
                    if !b.is_empty() {
                        return Err(corrupt("trailing bytes in SMK record".into()));
                    }
                    vault.smk = Some(SmkRecord {
                        created_at,
                        wrapped,
                    });
                }
                RECORD_DMK => {
                    let by_smk = b.lp_bytes().map_err(|e| corrupt(e.to_string()))?;
                    let by_password = b.lp_bytes().map_err(|e| corrupt(e.to_string()))?;
                    if !b.is_empty() {
                        return Err(corrupt("trailing bytes in DMK record".into()));
                    }
                    vault.dmk = Some(DmkRecord {
                        wrapped_by_smk: WrappedBlob::decode(by_smk)
                            .map_err(|e| corrupt(format!("DMK record: {e}")))?,
                        wrapped_by_password: WrappedBlob::decode(by_password)
                            .map_err(|e| corrupt(format!("DMK record: {e}")))?,
                    });
                }
                RECORD_CERTIFICATE => {
                    let name = b.lp_string().map_err(|e| corrupt(e.to_string()))?;
                    let subject = b.lp_string().map_err(|e| corrupt(e.to_string()))?;
                    let n =
                        BigUint::from_bytes_be(b.lp_bytes().map_err(|e| corrupt(e.to_string()))?);
                    let e =
                        BigUint::from_bytes_be(b.lp_bytes().map_err(|e| corrupt(e.to_string()))?);
                    let protection =
                        PrivateKeyProtection::from_id(b.u8().map_err(|e| corrupt(e.to_string()))?)
                            .ok_or_else(|| corrupt("bad protection id".into()))?;
                    let thumbprint =
                        Thumbprint(b.array::<20>().map_err(|e| corrupt(e.to_string()))?);
                    let created_at = b.u64().map_err(|e| corrupt(e.to_string()))?;
                    let blob_bytes = b.lp_bytes().map_err(|e| corrupt(e.to_string()))?;
                    if !b.is_empty() {
                        return Err(corrupt("trailing bytes in certificate record".into()));
                    }
                    let public_key = RsaPublicKey::new(n, e)
                        .map_err(|_| corrupt("invalid certificate public key".into()))?;
                    vault.certificates.push(CertificateRecord {
                        name,
                        subject,
                        public_key,
                        private_key_wrapped: WrappedBlob::decode(blob_bytes)
                            .map_err(|e| corrupt(format!("certificate record: {e}")))?,
                        protection,
                        thumbprint,
                        created_at,
                    });
                }
                other => return Err(corrupt(format!("unknown record type {other}"))),
            }
        }
        Ok(vault)
    }
}
