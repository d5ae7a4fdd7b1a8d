//! Encrypted key-wrapping blobs.
//!
//! A [`WrappedBlob`] is the stored form of one key encrypted under another.
//! Three schemes exist:
//!
//! * `SymmetricKey` — AES-128-CTR + HMAC-SHA-256/16, encrypt-then-MAC, keyed
//!   by subkeys of the wrapping key material; `iv_or_label` holds the 16-byte
//!   CTR IV.
//! * `Password` — same construction keyed by PBKDF2 of the password;
//!   `iv_or_label` holds a 16-byte salt followed by the 16-byte IV.
//! * `RsaOaep` — RSA-OAEP with SHA-256 under a certificate public key; the
//!   padding provides integrity, so no MAC field is stored.

use rsa::{Oaep, RsaPrivateKey, RsaPublicKey};
use sha2::Sha256;
use thiserror::Error;

use crate::crypto;
use crate::wire::{Reader, WireError, Writer};

const ENC_TAG: u8 = 0x01;
const MAC_TAG: u8 = 0x02;

/// Key-wrapping scheme discriminator, stored as the blob's first byte.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WrapScheme {
    SymmetricKey = 1,
    Password = 2,
    RsaOaep = 3,
}

impl WrapScheme {
    fn from_id(id: u8) -> Option<Self> {
        match id {
            1 => Some(WrapScheme::SymmetricKey),
            2 => Some(WrapScheme::Password),
            3 => Some(WrapScheme::RsaOaep),
            _ => None,
        }
    }
}

#[derive(Debug, Error)]
pub enum BlobError {
    #[error("malformed wrapped blob: {0}")]
    Malformed(String),
    #[error("authentication failed")]
    MacMismatch,
    #[error("asymmetric unwrap failed")]
    RsaFailed,
    #[error("wrong scheme for this unwrap operation")]
    SchemeMismatch,
}

impl From<WireError> for BlobError {
    fn from(err: WireError) -> Self {
        BlobError::Malformed(err.to_string())
    }
}

/// One key encrypted under another, in its serialized-at-rest shape.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WrappedBlob {
    pub scheme: WrapScheme,
    pub iv_or_label: Vec<u8>,
    pub ciphertext: Vec<u8>,
    pub mac: Option<[u8; crypto::MAC_LEN]>,
}

impl WrappedBlob {
    /// Wrap `plaintext` under symmetric key material of any length.
    pub fn wrap_symmetric(kek: &[u8], plaintext: &[u8]) -> WrappedBlob {
        let iv = crypto::random_array::<16>();
        Self::seal(WrapScheme::SymmetricKey, kek, iv.to_vec(), &iv, plaintext)
    }

    /// Unwrap a `SymmetricKey` blob.
    pub fn unwrap_symmetric(&self, kek: &[u8]) -> Result<Vec<u8>, BlobError> {
        if self.scheme != WrapScheme::SymmetricKey {
            return Err(BlobError::SchemeMismatch);
        }
        if self.iv_or_label.len() != 16 {
            return Err(BlobError::Malformed("bad iv length".into()));
        }
        let iv: [u8; 16] = self.iv_or_label[..].try_into().unwrap();
        self.open(kek, &iv)
    }

    /// Wrap `plaintext` under a password via PBKDF2 with a fresh salt.
    pub fn wrap_password(password: &str, plaintext: &[u8]) -> WrappedBlob {
        let salt = crypto::random_array::<16>();
        let iv = crypto::random_array::<16>();
        let derived = crypto::pbkdf2_key16(password.as_bytes(), &salt);
        let mut label = salt.to_vec();
        label.extend_from_slice(&iv);
        Self::seal(WrapScheme::Password, &derived, label, &iv, plaintext)
    }

    /// Unwrap a `Password` blob.
    pub fn unwrap_password(&self, password: &str) -> Result<Vec<u8>, BlobError> {
        if self.scheme != WrapScheme::Password {
            return Err(BlobError::SchemeMismatch);
        }
        if self.iv_or_label.len() != 32 {
            return Err(BlobError::Malformed("bad salt/iv length".into()));
        }
        let salt: [u8; 16] = self.iv_or_label[..16].try_into().unwrap();
        let iv: [u8; 16] = self.iv_or_label[16..].try_into().unwrap();
        let derived = crypto::pbkdf2_key16(password.as_bytes(), &salt);
        self.open(&derived, &iv)
    }

    /// Wrap `plaintext` under an RSA public key (OAEP, SHA-256).
    pub fn wrap_rsa(public_key: &RsaPublicKey, plaintext: &[u8]) -> Result<WrappedBlob, BlobError> {
        let ciphertext = public_key
            .encrypt(&mut rand::rngs::OsRng, Oaep::new::<Sha256>(), plaintext)
            .map_err(|_| BlobError::RsaFailed)?;
        Ok(WrappedBlob {
            scheme: WrapScheme::RsaOaep,
            iv_or_label: Vec::new(),
            ciphertext,
            mac: None,
        })
    }

    /// Unwrap an `RsaOaep` blob with the matching private key.
    pub fn unwrap_rsa(&self, private_key: &RsaPrivateKey) -> Result<Vec<u8>, BlobError> {
        if self.scheme != WrapScheme::RsaOaep {
            return Err(BlobError::SchemeMismatch);
        }
        private_key
            .decrypt(Oaep::new::<Sha256>(), &self.ciphertext)
            .map_err(|_| BlobError::RsaFailed)
    }

    fn seal(
        scheme: WrapScheme,
        key_material: &[u8],
        iv_or_label: Vec<u8>,
        iv: &[u8; 16],
        plaintext: &[u8],
    ) -> WrappedBlob {
        let enc_key = crypto::subkey16(key_material, ENC_TAG);
        let mac_key = crypto::subkey(key_material, MAC_TAG);
        let mut ciphertext = plaintext.to_vec();
        crypto::aes128_ctr_apply(&enc_key, iv, &mut ciphertext);
        let mac = crypto::mac16(
            &mac_key,
            &[
                &[scheme as u8],
                &(iv_or_label.len() as u32).to_le_bytes(),
                &iv_or_label,
                &ciphertext,
            ],
        );
        WrappedBlob {
            scheme,
            iv_or_label,
            ciphertext,
            mac: Some(mac),
        }
    }

    fn open(&self, key_material: &[u8], iv: &[u8; 16]) -> Result<Vec<u8>, BlobError> {
        let mac = self.mac.ok_or(BlobError::MacMismatch)?;
        let mac_key = crypto::subkey(key_material, MAC_TAG);
        let authentic = crypto::mac16_verify(
            &mac_key,
            &[
                &[self.scheme as u8],
                &(self.iv_or_label.len() as u32).to_le_bytes(),
                &self.iv_or_label,
                &self.ciphertext,
            ],
            &mac,
        );
        if !authentic {
            return Err(BlobError::MacMismatch);
        }
        let enc_key = crypto::subkey16(key_material, ENC_TAG);
        let mut plaintext = self.ciphertext.clone();
        crypto::aes128_ctr_apply(&enc_key, iv, &mut plaintext);
        Ok(plaintext)
    }

    /// Serialize: scheme u8, iv/label (u32-length-prefixed), ciphertext
    /// (u32-length-prefixed), then the 16-byte MAC for symmetric schemes.
    pub fn encode(&self) -> Vec<u8> {
        let mut w = Writer::new();
        w.u8(self.scheme as u8);
        w.lp_bytes(&self.iv_or_label);
        w.lp_bytes(&self.ciphertext);
        if let Some(mac) = &self.mac {
            w.bytes(mac);
        }
        w.into_inner()
    }

    /// Parse a blob from the front of `reader`.
    pub fn decode_from(reader: &mut Reader<'_>) -> Result<WrappedBlob, BlobError> {
        let scheme_id = reader.u8()?;
        let scheme = WrapScheme::from_id(scheme_id)
            .ok_or_else(|| BlobError::Malformed(format!("unknown scheme id {scheme_id}")))?;
        let iv_or_label = reader.lp_bytes()?.to_vec();
        let ciphertext = reader.lp_bytes()?.to_vec();
        let mac = match scheme {
            WrapScheme::RsaOaep => None,
            _ => Some(reader.array::<{ crypto::MAC_LEN }>()?),
        };
        Ok(WrappedBlob {
            scheme,
            iv_or_label,
            ciphertext,
            mac,
        })
    }

    /// Parse a blob that occupies exactly `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<WrappedBlob, BlobError> {
        let mut reader = Reader::new(bytes);
        let blob = Self::decode_from(&mut reader)?;
        if !reader.is_empty() {
            return Err(BlobError::Malformed("trailing bytes after blob".into()));
        }
        Ok(blob)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_round_trip() {
        let kek = crypto::random_array::<32>();
        let secret = crypto::random_array::<32>();
        let blob = WrappedBlob::wrap_symmetric(&kek, &secret);
        assert_eq!(blob.unwrap_symmetric(&kek).unwrap(), secret.to_vec());
    }

    #[test]
    fn symmetric_rejects_wrong_key() {
        let blob = WrappedBlob::wrap_symmetric(&[1u8; 32], b"secret");
        assert!(matches!(
            blob.unwrap_symmetric(&[2u8; 32]),
            Err(BlobError::MacMismatch)
        ));
    }

    #[test]
    fn password_round_trip_and_rejection() {
        let blob = WrappedBlob::wrap_password("hunter2", b"key material");
        assert_eq!(blob.unwrap_password("hunter2").unwrap(), b"key material");
        assert!(matches!(
            blob.unwrap_password("hunter3"),
            Err(BlobError::MacMismatch)
        ));
    }

    #[test]
    fn password_salts_differ_per_blob() {
        let a = WrappedBlob::wrap_password("pw", b"same");
        let b = WrappedBlob::wrap_password("pw", b"same");
        assert_ne!(a.iv_or_label, b.iv_or_label);
        assert_ne!(a.ciphertext, b.ciphertext);
    }

    #[test]
    fn rsa_round_trip() {
        let key = RsaPrivateKey::new(&mut rand::rngs::OsRng, 2048).unwrap();
        let blob = WrappedBlob::wrap_rsa(&RsaPublicKey::from(&key), b"0123456789abcdef").unwrap();
        assert!(blob.mac.is_none());
        assert_eq!(blob.unwrap_rsa(&key).unwrap(), b"0123456789abcdef");
    }

    #[test]
    fn encode_decode_round_trip() {
        let kek = crypto::random_array::<16>();
        let blob = WrappedBlob::wrap_symmetric(&kek, b"round trip me");
        let decoded = WrappedBlob::decode(&blob.encode()).unwrap();
        assert_eq!(decoded, blob);
        assert_eq!(decoded.unwrap_symmetric(&kek).unwrap(), b"round trip me");
    }

    // Every single-byte flip in iv, ciphertext, or mac must be rejected.
    #[test]
    fn symmetric_flip_exhaustive() {
        let kek = crypto::random_array::<32>();
        let blob = WrappedBlob::wrap_symmetric(&kek, b"sixteen byte key");
        for field in 0..3 {
            let len = match field {
                0 => blob.iv_or_label.len(),
                1 => blob.ciphertext.len(),
                _ => crypto::MAC_LEN,
            };
            for i in 0..len {
                for bit in 0..8 {
                    let mut tampered = blob.clone();
                    match field {
                        0 => tampered.iv_or_label[i] ^= 1 << bit,
                        1 => tampered.ciphertext[i] ^= 1 << bit,
                        _ => tampered.mac.as_mut().unwrap()[i] ^= 1 << bit,
                    }
                    assert!(
                        tampered.unwrap_symmetric(&kek).is_err(),
                        "flip survived: field {field}, byte {i}, bit {bit}"
                    );
                }
            }
        }
    }

    // Flips of the serialized form must never unwrap either, whatever the
    // decoder makes of them.
    #[test]
    fn encoded_flip_exhaustive() {
        let kek = crypto::random_array::<32>();
        let blob = WrappedBlob::wrap_symmetric(&kek, b"sealed");
        let encoded = blob.encode();
        for i in 0..encoded.len() {
            let mut tampered = encoded.clone();
            tampered[i] ^= 0x01;
            let survived = WrappedBlob::decode(&tampered)
                .ok()
                .and_then(|b| b.unwrap_symmetric(&kek).ok());
            assert!(survived.is_none(), "encoded flip survived at byte {i}");
        }
    }
}
