//! Little-endian framing helpers shared by the on-disk formats.
//!
//! Every persisted structure in the store (key store, boot record, catalog
//! manifest, backup image, certificate backups) uses the same conventions:
//! little-endian integers and u32-length-prefixed byte strings. [`Reader`]
//! bounds-checks every access so truncated or corrupt files surface as
//! [`WireError`] instead of panics.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum WireError {
    #[error("unexpected end of data at offset {0}")]
    UnexpectedEof(usize),
    #[error("bad magic bytes")]
    BadMagic,
    #[error("length field exceeds remaining data")]
    LengthOverflow,
}

/// Bounds-checked cursor over a byte slice.
pub struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(buf: &'a [u8]) -> Self {
        Reader { buf, pos: 0 }
    }

    pub fn position(&self) -> usize {
        self.pos
    }

    pub fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    pub fn is_empty(&self) -> bool {
        self.remaining() == 0
    }

    pub fn bytes(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        if self.remaining() < n {
            return Err(WireError::UnexpectedEof(self.pos));
        }
        let out = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn array<const N: usize>(&mut self) -> Result<[u8; N], WireError> {
        Ok(self.bytes(N)?.try_into().unwrap())
    }

    pub fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.bytes(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, WireError> {
        Ok(u32::from_le_bytes(self.array::<4>()?))
    }

    pub fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_le_bytes(self.array::<8>()?))
    }

    /// u32-length-prefixed byte string.
    pub fn lp_bytes(&mut self) -> Result<&'a [u8], WireError> {
        let len = self.u32()? as usize;
        if self.remaining() < len {
            return Err(WireError::LengthOverflow);
        }
        self.bytes(len)
    }

    /// u32-length-prefixed UTF-8 string.
    pub fn lp_string(&mut self) -> Result<String, WireError> {
        let bytes = self.lp_bytes()?;
        String::from_utf8(bytes.to_vec()).map_err(|_| WireError::LengthOverflow)
    }

    pub fn expect_magic(&mut self, magic: &[u8]) -> Result<(), WireError> {
        if self.remaining() < magic.len() {
            return Err(WireError::UnexpectedEof(self.pos));
        }
        if self.bytes(magic.len())? != magic {
            return Err(WireError::BadMagic);
        }
        Ok(())
    }
}

/// Byte-buffer builder matching [`Reader`]'s conventions.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Writer::default()
    }

    pub fn u8(&mut self, v: u8) -> &mut Self {
        self.buf.push(v);
        self
    }

    pub fn u32(&mut self, v: u32) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn u64(&mut self, v: u64) -> &mut Self {
        self.buf.extend_from_slice(&v.to_le_bytes());
        self
    }

    pub fn bytes(&mut self, v: &[u8]) -> &mut Self {
        self.buf.extend_from_slice(v);
        self
    }

    pub fn lp_bytes(&mut self, v: &[u8]) -> &mut Self {
        self.u32(v.len() as u32);
        self.buf.extend_from_slice(v);
        self
    }

    pub fn lp_string(&mut self, v: &str) -> &mut Self {
        self.lp_bytes(v.as_bytes())
    }

    pub fn into_inner(self) -> Vec<u8> {
        self.buf
    }
}
