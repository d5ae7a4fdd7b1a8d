//! Shared cryptographic primitives: SHA-256, HMAC, AES-128-CTR, PBKDF2,
//! subkey derivation, and random byte generation.
//!
//! Everything here is a thin, fixed-parameter wrapper over the RustCrypto
//! crates. Key separation across the store uses [`subkey`]: distinct uses of
//! one piece of key material get distinct keys by hashing the material with a
//! one-byte domain tag.

use aes::cipher::{KeyIvInit, StreamCipher};
use hmac::{Hmac, Mac};
use rand::RngCore;
use sha2::{Digest, Sha256};
use subtle::ConstantTimeEq;

type Aes128Ctr = ctr::Ctr128BE<aes::Aes128>;
type HmacSha256 = Hmac<Sha256>;

/// PBKDF2 iteration count for all password- and secret-derived keys.
pub const PBKDF2_ITERATIONS: u32 = 100_000;

/// Length of truncated HMAC tags stored in on-disk formats.
pub const MAC_LEN: usize = 16;

/// SHA-256 over the concatenation of `parts`.
pub fn sha256(parts: &[&[u8]]) -> [u8; 32] {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update(part);
    }
    hasher.finalize().into()
}

/// HMAC-SHA-256 over the concatenation of `parts`.
pub fn hmac_sha256(key: &[u8], parts: &[&[u8]]) -> [u8; 32] {
    let mut mac = HmacSha256::new_from_slice(key).expect("hmac accepts any key length");
    for part in parts {
        mac.update(part);
    }
    mac.finalize().into_bytes().into()
}

/// HMAC-SHA-256 truncated to the 16 bytes stored in page headers and blobs.
pub fn mac16(key: &[u8], parts: &[&[u8]]) -> [u8; MAC_LEN] {
    let full = hmac_sha256(key, parts);
    let mut out = [0u8; MAC_LEN];
    out.copy_from_slice(&full[..MAC_LEN]);
    out
}

/// Constant-time check of a truncated tag.
pub fn mac16_verify(key: &[u8], parts: &[&[u8]], expected: &[u8]) -> bool {
    if expected.len() != MAC_LEN {
        return false;
    }
    let computed = mac16(key, parts);
    computed.ct_eq(expected).into()
}

/// Encrypt or decrypt `buf` in place with AES-128-CTR (big-endian counter).
pub fn aes128_ctr_apply(key: &[u8; 16], iv: &[u8; 16], buf: &mut [u8]) {
    let mut cipher = Aes128Ctr::new(key.into(), iv.into());
    cipher.apply_keystream(buf);
}

/// PBKDF2-HMAC-SHA-256 with the store-wide iteration count, 16-byte output.
pub fn pbkdf2_key16(secret: &[u8], salt: &[u8]) -> [u8; 16] {
    let mut out = [0u8; 16];
    pbkdf2::pbkdf2_hmac::<Sha256>(secret, salt, PBKDF2_ITERATIONS, &mut out);
    out
}

/// Derive a 32-byte subkey as SHA-256(key_material || tag).
pub fn subkey(key_material: &[u8], tag: u8) -> [u8; 32] {
    sha256(&[key_material, &[tag]])
}

/// First 16 bytes of [`subkey`], used as an AES-128 key.
pub fn subkey16(key_material: &[u8], tag: u8) -> [u8; 16] {
    let full = subkey(key_material, tag);
    let mut out = [0u8; 16];
    out.copy_from_slice(&full[..16]);
    out
}

/// Fill a fixed-size array from the OS CSPRNG.
pub fn random_array<const N: usize>() -> [u8; N] {
    let mut out = [0u8; N];
    rand::rngs::OsRng.fill_bytes(&mut out);
    out
}

/// Whether `needle` occurs anywhere in `haystack` (plain byte scan).
///
/// Used by tests and invariant checks that assert key material and plaintext
/// never appear in persisted files.
pub fn contains_window(haystack: &[u8], needle: &[u8]) -> bool {
    if needle.is_empty() || haystack.len() < needle.len() {
        return false;
    }
    haystack.windows(needle.len()).any(|w| w == needle)
}
