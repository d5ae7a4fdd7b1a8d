//! Portable database backup images (`.tdebak`).
//!
//! An image is a verbatim copy of the database's on-disk bytes: the boot
//! page, every allocated page exactly as stored, and the whole log file,
//! followed by a SHA-256 digest of everything before it. Nothing is ever
//! decrypted on the backup path, so an encrypted database's backup media
//! carries only ciphertext by construction.
//!
//! Layout (little-endian): magic `TDEBKUP1`, version u32, database name
//! (u32-length-prefixed), boot page (u32-length-prefixed, one page), page
//! count u64 followed by that many 8192-byte page images, log length u64
//! followed by the raw log bytes, digest (final 32 bytes).

use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::crypto;
use crate::pager::{Database, PagerError, PAGE_SIZE};
use crate::wire::{Reader, Writer};

pub const IMAGE_MAGIC: &[u8] = b"TDEBKUP1";
pub const IMAGE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum BackupError {
    #[error("corrupt backup image: {0}")]
    CorruptImage(String),
    #[error(transparent)]
    Pager(#[from] PagerError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A parsed, digest-verified backup image.
#[derive(Debug, Clone)]
pub struct BackupImage {
    pub name: String,
    pub boot_page: Vec<u8>,
    pub pages: Vec<Vec<u8>>,
    pub log_bytes: Vec<u8>,
    pub digest: [u8; 32],
}

/// What a completed backup wrote.
#[derive(Debug, Clone)]
pub struct BackupSummary {
    pub database: String,
    pub pages: u64,
    pub image_bytes: u64,
    pub digest: [u8; 32],
}

/// Write a backup image of `db` to `path` using raw page and log reads only.
pub fn write_image(db: &mut Database, path: &Path) -> Result<BackupSummary, BackupError> {
    let mut w = Writer::new();
    w.bytes(IMAGE_MAGIC);
    w.u32(IMAGE_VERSION);
    w.lp_string(db.name());

    let boot_page = db.raw_page(0)?;
    w.lp_bytes(&boot_page);

    let page_count = db.allocated_pages()?;
    w.u64(page_count);
    for index in 1..=page_count {
        w.bytes(&db.raw_page(index)?);
    }

    let log_bytes = db.raw_log()?;
    w.u64(log_bytes.len() as u64);
    w.bytes(&log_bytes);

    let mut content = w.into_inner();
    let digest = crypto::sha256(&[&content]);
    content.extend_from_slice(&digest);

    fs::write(path, &content)?;
    Ok(BackupSummary {
        database: db.name().to_string(),
        pages: page_count,
        image_bytes: content.len() as u64,
        digest,
    })
}

/// Parse and verify an image held in memory. Any truncation or corruption
/// fails the digest or the structural checks.
pub fn validate_image_bytes(bytes: &[u8]) -> Result<BackupImage, BackupError> {
    let corrupt = |m: &str| BackupError::CorruptImage(m.to_string());
    if bytes.len() < 32 {
        return Err(corrupt("shorter than a digest"));
    }
    let (content, digest_stored) = bytes.split_at(bytes.len() - 32);
    let digest = crypto::sha256(&[content]);
    if digest[..] != digest_stored[..] {
        return Err(corrupt("digest mismatch"));
    }

    let mut r = Reader::new(content);
    r.expect_magic(IMAGE_MAGIC)
        .map_err(|_| corrupt("bad magic"))?;
    let version = r.u32().map_err(|e| corrupt(&e.to_string()))?;
    if version != IMAGE_VERSION {
        return Err(corrupt("unsupported version"));
    }
    let name = r.lp_string().map_err(|e| corrupt(&e.to_string()))?;
    let boot_page = r.lp_bytes().map_err(|e| corrupt(&e.to_string()))?.to_vec();
    if boot_page.len() != PAGE_SIZE {
        return Err(corrupt("boot section is not one page"));
    }
    let page_count = r.u64().map_err(|e| corrupt(&e.to_string()))?;
    let mut pages = Vec::with_capacity(page_count as usize);
    for _ in 0..page_count {
        pages.push(
            r.bytes(PAGE_SIZE)
                .map_err(|e| corrupt(&e.to_string()))?
                .to_vec(),
        );
    }
    let log_len = r.u64().map_err(|e| corrupt(&e.to_string()))? as usize;
    let log_bytes = r
        .bytes(log_len)
        .map_err(|e| corrupt(&e.to_string()))?
        .to_vec();
    if !r.is_empty() {
        return Err(corrupt("trailing bytes after log section"));
    }
    Ok(BackupImage {
        name,
        boot_page,
        pages,
        log_bytes,
        digest: digest_stored.try_into().unwrap(),
    })
}

/// Read and verify an image file.
pub fn read_image(path: &Path) -> Result<BackupImage, BackupError> {
    validate_image_bytes(&fs::read(path)?)
}

/// Write the image's files back to disk, verbatim.
pub fn materialize(
    image: &BackupImage,
    data_path: &Path,
    log_path: &Path,
) -> Result<(), BackupError> {
    let mut data = Vec::with_capacity((1 + image.pages.len()) * PAGE_SIZE);
    data.extend_from_slice(&image.boot_page);
    for page in &image.pages {
        data.extend_from_slice(page);
    }
    fs::write(data_path, &data)?;
    fs::write(log_path, &image.log_bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyvault::{DatabaseEncryptionKey, DekAlgorithm, Thumbprint};
    use crate::pager::{FileParams, PAGE_PAYLOAD_SIZE};
    use tempfile::TempDir;

    const KB: u64 = 1 << 10;

    fn tiny_db(dir: &TempDir) -> Database {
        let params = FileParams {
            size: 24 * KB,
            maxsize: 48 * KB,
            growth: 8 * KB,
        };
        let log_params = FileParams {
            size: 8 * KB,
            maxsize: 16 * KB,
            growth: 8 * KB,
        };
        Database::create(
            "Tiny",
            &dir.path().join("tiny.mdf"),
            &dir.path().join("tiny.ldf"),
            params,
            log_params,
        )
        .unwrap()
    }

    #[test]
    fn image_round_trip_and_digest() {
        let dir = TempDir::new().unwrap();
        let mut db = tiny_db(&dir);
        db.write_page(1, &vec![0x11; PAGE_PAYLOAD_SIZE]).unwrap();
        db.append_log_record(b"a log record").unwrap();

        let image_path = dir.path().join("tiny.tdebak");
        let summary = write_image(&mut db, &image_path).unwrap();
        assert_eq!(summary.database, "Tiny");
        assert_eq!(summary.pages, 2);

        let bytes = fs::read(&image_path).unwrap();
        // Independent digest recomputation over the raw file bytes.
        let recomputed = crypto::sha256(&[&bytes[..bytes.len() - 32]]);
        assert_eq!(recomputed[..], bytes[bytes.len() - 32..]);
        assert_eq!(recomputed, summary.digest);

        let image = read_image(&image_path).unwrap();
        assert_eq!(image.name, "Tiny");
        assert_eq!(image.pages.len(), 2);
        assert_eq!(image.pages[0], db.raw_page(1).unwrap());
        assert_eq!(image.log_bytes, db.raw_log().unwrap());
    }

    #[test]
    fn materialized_files_match_source() {
        let dir = TempDir::new().unwrap();
        let mut db = tiny_db(&dir);
        db.write_page(2, &vec![0x7E; PAGE_PAYLOAD_SIZE]).unwrap();
        let image_path = dir.path().join("tiny.tdebak");
        write_image(&mut db, &image_path).unwrap();

        let image = read_image(&image_path).unwrap();
        let out_data = dir.path().join("restored.mdf");
        let out_log = dir.path().join("restored.ldf");
        materialize(&image, &out_data, &out_log).unwrap();
        assert_eq!(
            fs::read(&out_data).unwrap(),
            fs::read(dir.path().join("tiny.mdf")).unwrap()
        );
        assert_eq!(
            fs::read(&out_log).unwrap(),
            fs::read(dir.path().join("tiny.ldf")).unwrap()
        );
    }

    // Every strict prefix of an image must fail verification.
    #[test]
    fn every_truncation_is_rejected() {
        let dir = TempDir::new().unwrap();
        let mut db = tiny_db(&dir);
        db.write_page(1, &vec![0x33; PAGE_PAYLOAD_SIZE]).unwrap();
        db.append_log_record(b"r").unwrap();
        let image_path = dir.path().join("tiny.tdebak");
        write_image(&mut db, &image_path).unwrap();
        let bytes = fs::read(&image_path).unwrap();

        for cut in 0..bytes.len() {
            assert!(
                matches!(
                    validate_image_bytes(&bytes[..cut]),
                    Err(BackupError::CorruptImage(_))
                ),
                "truncation at {cut} validated"
            );
        }
        assert!(validate_image_bytes(&bytes).is_ok());
    }

    #[test]
    fn single_byte_corruption_is_rejected() {
        let dir = TempDir::new().unwrap();
        let mut db = tiny_db(&dir);
        db.write_page(1, &vec![0x44; PAGE_PAYLOAD_SIZE]).unwrap();
        let image_path = dir.path().join("tiny.tdebak");
        write_image(&mut db, &image_path).unwrap();
        let bytes = fs::read(&image_path).unwrap();
        let step = (bytes.len() / 97).max(1);
        for i in (0..bytes.len()).step_by(step) {
            let mut tampered = bytes.clone();
            tampered[i] ^= 0x01;
            assert!(
                validate_image_bytes(&tampered).is_err(),
                "corruption at {i} validated"
            );
        }
    }

    // Backups never decrypt: encrypted page bytes land in the image verbatim.
    #[test]
    fn encrypted_backup_stores_ciphertext_verbatim() {
        let dir = TempDir::new().unwrap();
        let mut db = tiny_db(&dir);
        let sentinel = crypto::random_array::<32>();
        let mut payload = vec![0u8; PAGE_PAYLOAD_SIZE];
        payload[..32].copy_from_slice(&sentinel);
        db.write_page(1, &payload).unwrap();
        db.append_log_record(&sentinel).unwrap();

        let dek =
            DatabaseEncryptionKey::from_bytes(DekAlgorithm::Aes128, crypto::random_array::<16>());
        db.install_dek(1, Thumbprint([5u8; 20]), vec![0xBB; 32])
            .unwrap();
        db.set_encryption_on(&dek).unwrap();

        let image_path = dir.path().join("tiny.tdebak");
        write_image(&mut db, &image_path).unwrap();
        let image_bytes = fs::read(&image_path).unwrap();
        assert!(!crypto::contains_window(&image_bytes, &sentinel));

        db.set_encryption_off().unwrap();
        let plain_path = dir.path().join("tiny-plain.tdebak");
        write_image(&mut db, &plain_path).unwrap();
        let plain_bytes = fs::read(&plain_path).unwrap();
        assert!(crypto::contains_window(&plain_bytes, &sentinel));
    }
}
