//! Bit sequences with rank/select and fixed-width packed integer sequences.
//!
//! Both are stored as little-endian 64-bit words, bit `i` living in word
//! `i / 64` at position `i % 64` (least significant first).

use std::io::{self, Write};

use crate::blob::Blob;
use crate::error::{Error, Result};

/// Words per rank sample.
const SAMPLE_WORDS: usize = 8;

pub(crate) fn words_for_bits(bits: u64) -> Option<u64> {
    bits.checked_add(63).map(|b| b / 64)
}

/// Smallest width that can hold `max`, at least 1.
pub fn bits_for(max: u64) -> u8 {
    (64 - max.leading_zeros()).max(1) as u8
}

#[derive(Debug, Clone)]
pub struct BitSequence {
    words: Blob,
    len: u64,
    /// `samples[k]` = ones in words `0..k * SAMPLE_WORDS`.
    samples: Vec<u64>,
    ones: u64,
}

impl BitSequence {
    /// `words` must hold exactly `ceil(len / 64)` words.
    pub fn new(words: Blob, len: u64) -> Result<BitSequence> {
        let nwords = words_for_bits(len).ok_or_else(|| Error::Corrupt("bit length overflow".into()))?;
        if words.len() as u64 != nwords * 8 {
            return Err(Error::Corrupt(format!("bit sequence of {len} bits needs {nwords} words")));
        }
        let mut samples = Vec::with_capacity(nwords as usize / SAMPLE_WORDS + 1);
        let mut ones = 0u64;
        for w in 0..nwords as usize {
            if w % SAMPLE_WORDS == 0 {
                samples.push(ones);
            }
            ones += u64::from(words.u64_at(w).count_ones());
        }
        if samples.is_empty() {
            samples.push(0);
        }
        Ok(BitSequence { words, len, samples, ones })
    }

    pub fn from_bits(bits: &[bool]) -> BitSequence {
        let mut w = BitWriter::new(Vec::new());
        for &b in bits {
            w.push(b).expect("vec write");
        }
        let (len, bytes) = w.finish().expect("vec write");
        BitSequence::new(Blob::from_vec(bytes), len).expect("well formed")
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn count_ones(&self) -> u64 {
        self.ones
    }

    pub fn words(&self) -> &Blob {
        &self.words
    }

    pub fn get(&self, i: u64) -> bool {
        assert!(i < self.len, "bit {i} out of range {}", self.len);
        (self.words.u64_at((i / 64) as usize) >> (i % 64)) & 1 == 1
    }

    /// Number of set bits in `0..pos`.
    pub fn rank1(&self, pos: u64) -> u64 {
        if pos >= self.len {
            return self.ones;
        }
        let word = (pos / 64) as usize;
        let sample = word / SAMPLE_WORDS;
        let mut r = self.samples[sample];
        for w in sample * SAMPLE_WORDS..word {
            r += u64::from(self.words.u64_at(w).count_ones());
        }
        let rem = pos % 64;
        if rem > 0 {
            r += u64::from((self.words.u64_at(word) & ((1u64 << rem) - 1)).count_ones());
        }
        r
    }

    /// Position of the `k`-th set bit, `k` counted from 1.
    pub fn select1(&self, k: u64) -> Option<u64> {
        if k == 0 || k > self.ones {
            return None;
        }
        let sample = self.samples.partition_point(|&c| c < k) - 1;
        let mut remaining = k - self.samples[sample];
        let nwords = self.words.len() / 8;
        for w in sample * SAMPLE_WORDS..nwords {
            let mut word = self.words.u64_at(w);
            let pc = u64::from(word.count_ones());
            if remaining <= pc {
                for _ in 1..remaining {
                    word &= word - 1;
                }
                return Some(w as u64 * 64 + u64::from(word.trailing_zeros()));
            }
            remaining -= pc;
        }
        None
    }
}

/// Streams bits into 64-bit little-endian words.
pub struct BitWriter<W> {
    sink: W,
    word: u64,
    len: u64,
}

impl<W: Write> BitWriter<W> {
    pub fn new(sink: W) -> Self {
        BitWriter { sink, word: 0, len: 0 }
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, bit: bool) -> io::Result<()> {
        if bit {
            self.word |= 1 << (self.len % 64);
        }
        self.len += 1;
        if self.len.is_multiple_of(64) {
            self.sink.write_all(&self.word.to_le_bytes())?;
            self.word = 0;
        }
        Ok(())
    }

    /// Flushes the last partial word; returns the bit length and the sink.
    pub fn finish(mut self) -> io::Result<(u64, W)> {
        if !self.len.is_multiple_of(64) {
            self.sink.write_all(&self.word.to_le_bytes())?;
        }
        Ok((self.len, self.sink))
    }
}

#[derive(Debug, Clone)]
pub struct PackedInts {
    data: Blob,
    width: u8,
    len: u64,
}

impl PackedInts {
    pub fn new(data: Blob, width: u8, len: u64) -> Result<PackedInts> {
        if !(1..=64).contains(&width) {
            return Err(Error::Corrupt(format!("invalid integer width {width}")));
        }
        let words = len
            .checked_mul(u64::from(width))
            .and_then(words_for_bits)
            .ok_or_else(|| Error::Corrupt("packed sequence length overflow".into()))?;
        if data.len() as u64 != words * 8 {
            return Err(Error::Corrupt(format!("packed sequence of {len}x{width} bits needs {words} words")));
        }
        Ok(PackedInts { data, width, len })
    }

    pub fn from_values(values: &[u64], width: u8) -> PackedInts {
        let mut w = PackedWriter::new(Vec::new(), width);
        for &v in values {
            w.push(v).expect("value fits");
        }
        let (len, bytes) = w.finish().expect("vec write");
        PackedInts::new(Blob::from_vec(bytes), width, len).expect("well formed")
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn data(&self) -> &Blob {
        &self.data
    }

    pub fn get(&self, i: u64) -> u64 {
        assert!(i < self.len, "index {i} out of range {}", self.len);
        let width = u64::from(self.width);
        let bit = i * width;
        let w = (bit / 64) as usize;
        let off = bit % 64;
        let mut v = self.data.u64_at(w) >> off;
        if off + width > 64 {
            v |= self.data.u64_at(w + 1) << (64 - off);
        }
        v & mask(self.width)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }
}

fn mask(width: u8) -> u64 {
    if width == 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

/// Streams fixed-width integers into 64-bit little-endian words.
pub struct PackedWriter<W> {
    sink: W,
    width: u8,
    word: u64,
    used: u32,
    len: u64,
}

impl<W: Write> PackedWriter<W> {
    pub fn new(sink: W, width: u8) -> Self {
        assert!((1..=64).contains(&width));
        PackedWriter { sink, width, word: 0, used: 0, len: 0 }
    }

    pub fn width(&self) -> u8 {
        self.width
    }

    pub fn push(&mut self, value: u64) -> Result<()> {
        if value & !mask(self.width) != 0 {
            return Err(Error::Corrupt(format!("value {value} wider than {} bits", self.width)));
        }
        let width = u32::from(self.width);
        self.word |= value << self.used;
        if self.used + width >= 64 {
            self.sink.write_all(&self.word.to_le_bytes())?;
            let spill = self.used + width - 64;
            self.word = if spill == 0 { 0 } else { value >> (width - spill) };
            self.used = spill;
        } else {
            self.used += width;
        }
        self.len += 1;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<(u64, W)> {
        if self.used > 0 {
            self.sink.write_all(&self.word.to_le_bytes())?;
        }
        Ok((self.len, self.sink))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn widths() {
        assert_eq!(bits_for(0), 1);
        assert_eq!(bits_for(1), 1);
        assert_eq!(bits_for(2), 2);
        assert_eq!(bits_for(3), 2);
        assert_eq!(bits_for(4), 3);
        assert_eq!(bits_for(u64::MAX), 64);
    }

    #[test]
    fn empty_sequences() {
        let b = BitSequence::from_bits(&[]);
        assert_eq!(b.len(), 0);
        assert_eq!(b.select1(1), None);
        assert_eq!(b.rank1(0), 0);
        let p = PackedInts::from_values(&[], 3);
        assert!(p.is_empty());
        assert!(p.data().is_empty());
    }

    #[test]
    fn full_width_values() {
        let vals = [u64::MAX, 0, 1 << 63, 12345];
        let p = PackedInts::from_values(&vals, 64);
        assert_eq!(p.iter().collect::<Vec<_>>(), vals);
    }

    #[test]
    fn rejects_wide_value() {
        let mut w = PackedWriter::new(Vec::new(), 2);
        assert!(w.push(4).is_err());
    }

    #[test]
    fn wrong_word_count_rejected() {
        assert!(BitSequence::new(Blob::from_vec(vec![0; 16]), 64).is_err());
        assert!(PackedInts::new(Blob::from_vec(vec![0; 8]), 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn rank_select_match_naive(bits in proptest::collection::vec(any::<bool>(), 0..2000)) {
            let seq = BitSequence::from_bits(&bits);
            prop_assert_eq!(seq.len(), bits.len() as u64);
            let ones: Vec<u64> = bits.iter().enumerate().filter(|(_, b)| **b).map(|(i, _)| i as u64).collect();
            prop_assert_eq!(seq.count_ones(), ones.len() as u64);
            for (k, &pos) in ones.iter().enumerate() {
                prop_assert_eq!(seq.select1(k as u64 + 1), Some(pos));
            }
            prop_assert_eq!(seq.select1(ones.len() as u64 + 1), None);
            let mut r = 0;
            for (i, &b) in bits.iter().enumerate() {
                prop_assert_eq!(seq.rank1(i as u64), r);
                prop_assert_eq!(seq.get(i as u64), b);
                r += u64::from(b);
            }
            prop_assert_eq!(seq.rank1(bits.len() as u64), r);
        }

        #[test]
        fn packed_round_trip(width in 1u8..=64, raw in proptest::collection::vec(any::<u64>(), 0..300)) {
            let vals: Vec<u64> = raw.iter().map(|v| v & mask(width)).collect();
            let p = PackedInts::from_values(&vals, width);
            prop_assert_eq!(p.iter().collect::<Vec<_>>(), vals);
        }
    }
}
