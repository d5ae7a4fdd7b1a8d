//! Classical letter ciphers: alphabet shift (Caesar) and string reversal.
//!
//! These are demonstration ciphers only. Nothing in the encrypted store
//! depends on them; they are exposed through the CLI `cipher` subcommand.

/// A shift amount for the alphabet cipher, stored reduced modulo 26.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShiftKey(u8);

impl ShiftKey {
    /// Build a key from an arbitrary integer, reducing it into `[0, 25]`.
    pub fn new(shift: i64) -> Self {
        ShiftKey(shift.rem_euclid(26) as u8)
    }

    /// The reduced shift amount.
    pub fn shift(self) -> u8 {
        self.0
    }

    /// The key that undoes this one.
    pub fn inverse(self) -> Self {
        ShiftKey((26 - self.0) % 26)
    }
}

fn shift_char(c: char, shift: u8) -> char {
    match c {
        'a'..='z' => (b'a' + (c as u8 - b'a' + shift) % 26) as char,
        'A'..='Z' => (b'A' + (c as u8 - b'A' + shift) % 26) as char,
        _ => c,
    }
}

/// Shift every ASCII letter `key` positions forward within its case class.
/// Non-letters pass through unchanged.
pub fn shift_encrypt(plaintext: &str, key: ShiftKey) -> String {
    plaintext
        .chars()
        .map(|c| shift_char(c, key.shift()))
        .collect()
}

/// Inverse of [`shift_encrypt`] under the same key.
pub fn shift_decrypt(ciphertext: &str, key: ShiftKey) -> String {
    shift_encrypt(ciphertext, key.inverse())
}

/// Emit the characters of `text` in reverse order. Applying it twice is the
/// identity.
pub fn reverse_cipher(text: &str) -> String {
    text.chars().rev().collect()
}
