//! Fixed-length binary strings, the universal instance representation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::ParseError;

/// An ordered sequence of bits. Equality is bitwise and includes the length.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    bits: Vec<bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self { bits: Vec::new() }
    }

    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// The `len`-bit big-endian representation of `value` (bit 0 is the most significant).
    pub fn from_u64(value: u64, len: usize) -> Self {
        let bits = (0..len)
            .map(|i| {
                let shift = len - 1 - i;
                shift < 64 && (value >> shift) & 1 == 1
            })
            .collect();
        Self { bits }
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_binary(s: &str) -> Result<Self, ParseError> {
        s.chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ParseError::new(format!("unexpected character {other:?} in binary string"))),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::from_bits)
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.bits.get(i).copied()
    }

    /// Bit `i`, reading positions past the end as zero.
    pub fn bit_or_zero(&self, i: usize) -> bool {
        self.bits.get(i).copied().unwrap_or(false)
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from(&mut self, other: &BitString) {
        self.bits.extend_from_slice(&other.bits);
    }

    /// `self` followed by `bit`.
    pub fn with(&self, bit: bool) -> BitString {
        let mut out = self.clone();
        out.push(bit);
        out
    }

    pub fn starts_with(&self, prefix: &BitString) -> bool {
        self.bits.starts_with(&prefix.bits)
    }

    /// Interprets the first `min(len, 64)` bits as a big-endian integer.
    pub fn to_u64(&self) -> u64 {
        self.bits.iter().take(64).fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// `self` extended with zeros to length `len`; truncates nothing.
    pub fn zero_extended(&self, len: usize) -> BitString {
        let mut bits = self.bits.clone();
        if bits.len() < len {
            bits.resize(len, false);
        }
        BitString { bits }
    }

    /// Hex body with the first bit as the most significant bit of the first nibble.
    pub fn to_hex_body(&self) -> String {
        self.bits
            .chunks(4)
            .map(|chunk| {
                let v = chunk.iter().enumerate().fold(0u8, |acc, (i, &b)| acc | ((b as u8) << (3 - i)));
                char::from_digit(v as u32, 16).expect("nibble")
            })
            .collect()
    }

    /// Parses a hex body and truncates it to `len` bits. Bits beyond `len` must be zero.
    pub fn from_hex_body(hex: &str, len: usize) -> Result<Self, ParseError> {
        let mut bits = Vec::with_capacity(hex.len() * 4);
        for c in hex.chars() {
            let v = c.to_digit(16).ok_or_else(|| ParseError::new(format!("invalid hex digit {c:?}")))?;
            for i in (0..4).rev() {
                bits.push((v >> i) & 1 == 1);
            }
        }
        if bits.len() < len || bits.len() >= len + 4 {
            return Err(ParseError::new(format!("hex body of {} digits cannot carry {len} bits", hex.len())));
        }
        if bits[len..].iter().any(|&b| b) {
            return Err(ParseError::new("nonzero bits past the declared length"));
        }
        bits.truncate(len);
        Ok(Self { bits })
    }

    /// Hex digest of the length-prefixed serialization.
    pub fn sha256(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.to_string().as_bytes());
        hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// All strings of length `len` in lexicographic order.
    pub fn all_of_length(len: usize) -> impl Iterator<Item = BitString> {
        assert!(len < 64, "enumeration length too large");
        (0..(1u64 << len)).map(move |v| BitString::from_u64(v, len))
    }

    /// A stable 64-bit fingerprint, identical across processes and platforms.
    pub fn fingerprint(&self) -> u64 {
        let mut h = mix64(self.bits.len() as u64 ^ 0x9e37_79b9_7f4a_7c15);
        for chunk in self.bits.chunks(64) {
            let word = chunk.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64);
            h = mix64(h ^ word).wrapping_add(chunk.len() as u64);
        }
        h
    }
}

/// SplitMix64 finalizer.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Serialized as `len:hex`.
impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.len(), self.to_hex_body())
    }
}

impl fmt::Debug for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len() <= 64 {
            let s: String = self.bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
            write!(f, "BitString({s})")
        } else {
            write!(f, "BitString({self})")
        }
    }
}

impl FromStr for BitString {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (len, hex) = s.trim().split_once(':').ok_or_else(|| ParseError::new("expected `len:hex`"))?;
        let len: usize = len.parse().map_err(|_| ParseError::new(format!("invalid bit length {len:?}")))?;
        BitString::from_hex_body(hex, len)
    }
}

impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for BitString {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

impl From<Vec<bool>> for BitString {
    fn from(bits: Vec<bool>) -> Self {
        Self::from_bits(bits)
    }
}

impl FromIterator<bool> for BitString {
    fn from_iter<I: IntoIterator<Item = bool>>(iter: I) -> Self {
        Self::from_bits(iter.into_iter().collect())
    }
}
