//! Bit-granular data blocks with GF(2) (XOR) arithmetic.
//!
//! Packets are byte strings, but sub-packets are packets divided into
//! `t * C(n, t)` equal pieces, which in general do not land on byte
//! boundaries. `BitBlock` stores an exact bit length and guarantees that
//! any unused bits in the trailing byte are zero, so equality and XOR are
//! well defined at bit granularity.

use crate::rng::SplitMix64;

/// An immutable-length block of bits. Bit `i` lives in byte `i / 8` at
/// position `i % 8` (LSB first).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitBlock {
    len: usize,
    data: Vec<u8>,
}

impl BitBlock {
    pub fn zeros(len: usize) -> Self {
        Self {
            len,
            data: vec![0u8; len.div_ceil(8)],
        }
    }

    /// Wraps whole bytes; the length is `8 * bytes.len()`.
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self {
            len: bytes.len() * 8,
            data: bytes,
        }
    }

    pub fn random(len: usize, rng: &mut SplitMix64) -> Self {
        let mut data = vec![0u8; len.div_ceil(8)];
        rng.fill_bytes(&mut data);
        let mut b = Self { len, data };
        b.mask_tail();
        b
    }

    pub fn len_bits(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(
            i < self.len,
            "bit index {i} out of range (len {})",
            self.len
        );
        self.data[i / 8] >> (i % 8) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(
            i < self.len,
            "bit index {i} out of range (len {})",
            self.len
        );
        if v {
            self.data[i / 8] |= 1 << (i % 8);
        } else {
            self.data[i / 8] &= !(1 << (i % 8));
        }
    }

    /// In-place XOR with an equal-length block.
    pub fn xor_assign(&mut self, other: &BitBlock) {
        assert_eq!(
            self.len, other.len,
            "xor requires equal lengths ({} vs {})",
            self.len, other.len
        );
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a ^= b;
        }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&b| b == 0)
    }

    /// Copies bits `start..start + len` into a new block.
    pub fn slice(&self, start: usize, len: usize) -> BitBlock {
        assert!(
            start + len <= self.len,
            "slice {start}+{len} exceeds length {}",
            self.len
        );
        if start.is_multiple_of(8) {
            let bytes = self.data[start / 8..(start + len).div_ceil(8)].to_vec();
            let mut b = BitBlock { len, data: bytes };
            b.mask_tail();
            return b;
        }
        let mut out = BitBlock::zeros(len);
        for i in 0..len {
            if self.get(start + i) {
                out.set(i, true);
            }
        }
        out
    }

    /// Appends another block, bit by bit when unaligned.
    pub fn append(&mut self, other: &BitBlock) {
        if self.len.is_multiple_of(8) {
            self.data.truncate(self.len / 8);
            self.data.extend_from_slice(&other.data);
            self.len += other.len;
            self.mask_tail();
            return;
        }
        let old = self.len;
        self.len += other.len;
        self.data.resize(self.len.div_ceil(8), 0);
        for i in 0..other.len {
            if other.get(i) {
                self.set(old + i, true);
            }
        }
    }

    /// Zero-extends to `len` bits (no-op if already at least that long).
    pub fn padded_to(&self, len: usize) -> BitBlock {
        if len <= self.len {
            return self.clone();
        }
        let mut out = self.clone();
        out.len = len;
        out.data.resize(len.div_ceil(8), 0);
        out
    }

    pub fn truncated(&self, len: usize) -> BitBlock {
        assert!(len <= self.len);
        let mut out = BitBlock {
            len,
            data: self.data[..len.div_ceil(8)].to_vec(),
        };
        out.mask_tail();
        out
    }

    pub fn to_hex(&self) -> String {
        let mut s = String::with_capacity(self.data.len() * 2);
        for b in &self.data {
            s.push_str(&format!("{b:02x}"));
        }
        s
    }

    fn mask_tail(&mut self) {
        let rem = self.len % 8;
        if rem != 0 {
            if let Some(last) = self.data.last_mut() {
                *last &= (1u8 << rem) - 1;
            }
        }
    }
}

impl std::fmt::Debug for BitBlock {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitBlock({} bits, 0x{})", self.len, self.to_hex())
    }
}

/// Concatenates blocks in order.
pub fn concat_bits<'a>(parts: impl IntoIterator<Item = &'a BitBlock>) -> BitBlock {
    let mut out = BitBlock::zeros(0);
    for p in parts {
        out.append(p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn xor_is_involutive() {
        let mut rng = SplitMix64::new(3);
        let a = BitBlock::random(29, &mut rng);
        let b = BitBlock::random(29, &mut rng);
        let mut c = a.clone();
        c.xor_assign(&b);
        c.xor_assign(&b);
        assert_eq!(a, c);
    }

    #[test]
    fn slice_and_concat_roundtrip_unaligned() {
        let mut rng = SplitMix64::new(11);
        let block = BitBlock::random(50, &mut rng);
        // 50 bits in 10 pieces of 5
        let parts: Vec<BitBlock> = (0..10).map(|i| block.slice(i * 5, 5)).collect();
        let back = concat_bits(parts.iter());
        assert_eq!(block, back);
    }

    #[test]
    fn pad_truncate_roundtrip() {
        let mut rng = SplitMix64::new(5);
        let block = BitBlock::random(13, &mut rng);
        assert_eq!(block, block.padded_to(40).truncated(13));
    }

    #[test]
    fn tail_bits_stay_zero() {
        let mut b = BitBlock::zeros(3);
        b.set(2, true);
        assert_eq!(b.as_bytes(), &[0b100]);
        let c = b.padded_to(9);
        assert_eq!(c.as_bytes(), &[0b100, 0]);
    }
}
