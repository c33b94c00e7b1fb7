//! Versioned binary encoding helpers and the bit-string type used for trie
//! prefixes. Encodings are canonical: decode rejects any byte string that
//! encode could not have produced.

use thiserror::Error;

use crate::digest::Digest;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CodecError {
    #[error("input truncated")]
    Truncated,
    #[error("malformed encoding: {0}")]
    Malformed(&'static str),
    #[error("trailing bytes after value")]
    TrailingBytes,
}

/// Append-only byte writer. All integers are little-endian.
#[derive(Default)]
pub struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }

    pub fn u16(&mut self, v: u16) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    pub fn raw(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// u32 length prefix followed by the bytes.
    pub fn var_bytes(&mut self, bytes: &[u8]) {
        debug_assert!(bytes.len() <= u32::MAX as usize);
        self.u32(bytes.len() as u32);
        self.raw(bytes);
    }

    pub fn digest(&mut self, d: &Digest) {
        self.raw(d.as_bytes());
    }

    pub fn bitstr(&mut self, b: &BitStr) {
        self.u16(b.len() as u16);
        self.raw(b.bytes());
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf
    }
}

/// Checked reader over a byte slice.
pub struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], CodecError> {
        if self.data.len() - self.pos < n {
            return Err(CodecError::Truncated);
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    pub fn u8(&mut self) -> Result<u8, CodecError> {
        Ok(self.take(1)?[0])
    }

    pub fn u16(&mut self) -> Result<u16, CodecError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    pub fn u32(&mut self) -> Result<u32, CodecError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub fn u64(&mut self) -> Result<u64, CodecError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub fn var_bytes(&mut self) -> Result<&'a [u8], CodecError> {
        let n = self.u32()? as usize;
        self.take(n)
    }

    pub fn digest(&mut self) -> Result<Digest, CodecError> {
        Ok(Digest(self.take(32)?.try_into().unwrap()))
    }

    pub fn bitstr(&mut self) -> Result<BitStr, CodecError> {
        let len = self.u16()? as usize;
        let bytes = self.take(len.div_ceil(8))?;
        BitStr::from_parts(len, bytes).ok_or(CodecError::Malformed("bit-string padding not zero"))
    }

    pub fn expect_end(&self) -> Result<(), CodecError> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(CodecError::TrailingBytes)
        }
    }
}

/// An MSB-first bit string of up to 2^16-1 bits. Unused bits in the final
/// byte are always zero, so equal bit strings have equal representations.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitStr {
    len: usize,
    bytes: Vec<u8>,
}

impl BitStr {
    pub fn empty() -> Self {
        BitStr { len: 0, bytes: Vec::new() }
    }

    /// All bits of `bytes`, length `8 * bytes.len()`.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        BitStr { len: bytes.len() * 8, bytes: bytes.to_vec() }
    }

    /// `len` bits backed by `bytes`; fails if padding bits are nonzero or the
    /// byte count is wrong.
    pub fn from_parts(len: usize, bytes: &[u8]) -> Option<Self> {
        if len > u16::MAX as usize || bytes.len() != len.div_ceil(8) {
            return None;
        }
        if len % 8 != 0 {
            let pad_mask = 0xffu8 >> (len % 8);
            if bytes[bytes.len() - 1] & pad_mask != 0 {
                return None;
            }
        }
        Some(BitStr { len, bytes: bytes.to_vec() })
    }

    pub fn single(bit: bool) -> Self {
        BitStr { len: 1, bytes: vec![if bit { 0x80 } else { 0x00 }] }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Bit at position `i` (0 = most significant bit of the first byte).
    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.bytes[i / 8] >> (7 - i % 8)) & 1 == 1
    }

    /// First `n` bits.
    pub fn prefix(&self, n: usize) -> BitStr {
        debug_assert!(n <= self.len);
        let mut bytes = self.bytes[..n.div_ceil(8)].to_vec();
        if n % 8 != 0 {
            let last = bytes.len() - 1;
            bytes[last] &= 0xffu8 << (8 - n % 8);
        }
        BitStr { len: n, bytes }
    }

    /// Bits from position `n` to the end.
    pub fn suffix(&self, n: usize) -> BitStr {
        debug_assert!(n <= self.len);
        let out_len = self.len - n;
        let skip = n / 8;
        let sh = n % 8;
        let mut bytes = Vec::with_capacity(out_len.div_ceil(8));
        if sh == 0 {
            bytes.extend_from_slice(&self.bytes[skip..]);
        } else {
            for i in skip..self.bytes.len() {
                let hi = self.bytes[i] << sh;
                let lo = self
                    .bytes
                    .get(i + 1)
                    .map_or(0, |b| b >> (8 - sh));
                bytes.push(hi | lo);
            }
        }
        bytes.truncate(out_len.div_ceil(8));
        if out_len % 8 != 0 {
            let last = bytes.len() - 1;
            bytes[last] &= 0xffu8 << (8 - out_len % 8);
        }
        BitStr { len: out_len, bytes }
    }

    pub fn starts_with(&self, prefix: &BitStr) -> bool {
        if prefix.len > self.len {
            return false;
        }
        let full = prefix.len / 8;
        if self.bytes[..full] != prefix.bytes[..full] {
            return false;
        }
        if prefix.len % 8 != 0 {
            let mask = 0xffu8 << (8 - prefix.len % 8);
            if self.bytes[full] & mask != prefix.bytes[full] {
                return false;
            }
        }
        true
    }

    /// True when the `pat.len()` bits of `self` starting at `offset` equal `pat`.
    pub fn matches_at(&self, offset: usize, pat: &BitStr) -> bool {
        if offset + pat.len > self.len {
            return false;
        }
        // Pattern lengths are at most 256 bits; a bit loop is fine here.
        (0..pat.len).all(|i| self.bit(offset + i) == pat.bit(i))
    }

    /// Length of the longest common prefix of `a` and `b`, in bits.
    pub fn lcp_len(a: &BitStr, b: &BitStr) -> usize {
        let max = a.len.min(b.len);
        let mut i = 0;
        while i < max / 8 * 8 {
            let x = a.bytes[i / 8] ^ b.bytes[i / 8];
            if x == 0 {
                i += 8;
            } else {
                return (i + x.leading_zeros() as usize).min(max);
            }
        }
        while i < max && a.bit(i) == b.bit(i) {
            i += 1;
        }
        i
    }
}

impl std::fmt::Debug for BitStr {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitStr(")?;
        for i in 0..self.len {
            write!(f, "{}", if self.bit(i) { '1' } else { '0' })?;
        }
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn to_bools(b: &BitStr) -> Vec<bool> {
        (0..b.len()).map(|i| b.bit(i)).collect()
    }

    fn from_bools(bits: &[bool]) -> BitStr {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (i, &b) in bits.iter().enumerate() {
            if b {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        BitStr::from_parts(bits.len(), &bytes).unwrap()
    }

    #[test]
    fn suffix_and_prefix_match_naive_model() {
        let bits: Vec<bool> = (0..41).map(|i| (i * 7 + 3) % 5 < 2).collect();
        let s = from_bools(&bits);
        for n in 0..=bits.len() {
            assert_eq!(to_bools(&s.prefix(n)), &bits[..n], "prefix {n}");
            assert_eq!(to_bools(&s.suffix(n)), &bits[n..], "suffix {n}");
        }
    }

    #[test]
    fn lcp_and_starts_with_agree() {
        let a = from_bools(&[true, false, true, true, false, false, true, true, true]);
        let b = from_bools(&[true, false, true, true, true]);
        let l = BitStr::lcp_len(&a, &b);
        assert_eq!(l, 4);
        assert!(a.starts_with(&b.prefix(l)));
        assert!(!a.starts_with(&b));
        assert!(a.starts_with(&a.clone()));
    }

    #[test]
    fn matches_at_against_model() {
        let bits: Vec<bool> = (0..23).map(|i| i % 3 == 0).collect();
        let s = from_bools(&bits);
        for off in 0..bits.len() {
            for len in 0..=(bits.len() - off) {
                let pat = from_bools(&bits[off..off + len]);
                assert!(s.matches_at(off, &pat));
            }
        }
        assert!(!s.matches_at(0, &from_bools(&[false])));
        assert!(!s.matches_at(22, &from_bools(&[true, true])));
    }

    #[test]
    fn encode_decode_round_trip_and_canonicality() {
        let s = from_bools(&[true, true, false, true, false]);
        let mut w = Writer::new();
        w.bitstr(&s);
        let bytes = w.into_bytes();
        let mut r = Reader::new(&bytes);
        assert_eq!(r.bitstr().unwrap(), s);
        r.expect_end().unwrap();

        // Nonzero padding bits must be rejected.
        let mut bad = bytes.clone();
        *bad.last_mut().unwrap() |= 0x01;
        assert!(Reader::new(&bad).bitstr().is_err());
    }

    #[test]
    fn reader_rejects_truncation_and_trailing() {
        let mut w = Writer::new();
        w.var_bytes(b"hello");
        let bytes = w.into_bytes();
        assert!(Reader::new(&bytes[..6]).var_bytes().is_err());
        let mut r = Reader::new(&bytes);
        r.var_bytes().unwrap();
        r.expect_end().unwrap();
        let mut extended = bytes;
        extended.push(0);
        let mut r = Reader::new(&extended);
        r.var_bytes().unwrap();
        assert_eq!(r.expect_end(), Err(CodecError::TrailingBytes));
    }
}
