//! Bitmap triples: ID triples sorted by subject, predicate, object and stored
//! as two packed ID sequences plus two bit sequences.
//!
//! `seq_p` holds the predicates of each subject in turn and `bit_p[i]` is set
//! on the last predicate of a subject. `seq_o` holds the objects of each
//! (subject, predicate) pair and `bit_o[j]` is set on the last object of a
//! pair.

use std::fmt;
use std::io::Write;

use crate::bits::{bits_for, BitSequence, BitWriter, PackedInts, PackedWriter};
use crate::blob::Blob;
use crate::error::{Error, Result};

/// A triple of global IDs, ordered lexicographically by (s, p, o).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct IdTriple {
    pub s: u64,
    pub p: u64,
    pub o: u64,
}

impl IdTriple {
    pub const fn new(s: u64, p: u64, o: u64) -> IdTriple {
        IdTriple { s, p, o }
    }
}

impl fmt::Display for IdTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.s, self.p, self.o)
    }
}

pub fn triple_cmp(a: &IdTriple, b: &IdTriple) -> std::cmp::Ordering {
    a.cmp(b)
}

/// Streaming encoder over four sinks. Triples must arrive strictly
/// increasing with contiguous subject IDs starting at 1.
pub struct BitmapEncoder<W> {
    bit_p: BitWriter<W>,
    bit_o: BitWriter<W>,
    seq_p: PackedWriter<W>,
    seq_o: PackedWriter<W>,
    last: Option<IdTriple>,
    triples: u64,
}

/// The four finished streams and their lengths.
pub struct EncodedTriples<W> {
    pub triple_count: u64,
    pub subject_count: u64,
    pub bit_p: (u64, W),
    pub bit_o: (u64, W),
    pub seq_p: (u8, u64, W),
    pub seq_o: (u8, u64, W),
}

impl<W: Write> BitmapEncoder<W> {
    /// `sinks` are for bit_p, bit_o, seq_p and seq_o, in that order.
    pub fn new(sinks: [W; 4], p_width: u8, o_width: u8) -> Self {
        let [bp, bo, sp, so] = sinks;
        BitmapEncoder {
            bit_p: BitWriter::new(bp),
            bit_o: BitWriter::new(bo),
            seq_p: PackedWriter::new(sp, p_width),
            seq_o: PackedWriter::new(so, o_width),
            last: None,
            triples: 0,
        }
    }

    pub fn push(&mut self, t: IdTriple) -> Result<()> {
        if t.s == 0 || t.p == 0 || t.o == 0 {
            return Err(Error::IdOutOfRange { id: 0, max: 0 });
        }
        match self.last {
            None => {
                if t.s != 1 {
                    return Err(Error::SubjectGap { expected: 1, found: t.s });
                }
                self.seq_p.push(t.p)?;
            }
            Some(last) => {
                if t == last {
                    return Err(Error::DuplicateTriple(t.to_string()));
                }
                if t < last {
                    return Err(Error::NotSorted(format!("{t} after {last}")));
                }
                if t.s != last.s {
                    if t.s != last.s + 1 {
                        return Err(Error::SubjectGap { expected: last.s + 1, found: t.s });
                    }
                    self.bit_o.push(true)?;
                    self.bit_p.push(true)?;
                    self.seq_p.push(t.p)?;
                } else if t.p != last.p {
                    self.bit_o.push(true)?;
                    self.bit_p.push(false)?;
                    self.seq_p.push(t.p)?;
                } else {
                    self.bit_o.push(false)?;
                }
            }
        }
        self.seq_o.push(t.o)?;
        self.last = Some(t);
        self.triples += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<EncodedTriples<W>> {
        if self.last.is_some() {
            self.bit_o.push(true)?;
            self.bit_p.push(true)?;
        }
        let (pw, ow) = (self.seq_p.width(), self.seq_o.width());
        let (p_len, sp) = self.seq_p.finish()?;
        let (o_len, so) = self.seq_o.finish()?;
        Ok(EncodedTriples {
            triple_count: self.triples,
            subject_count: self.last.map_or(0, |t| t.s),
            bit_p: self.bit_p.finish()?,
            bit_o: self.bit_o.finish()?,
            seq_p: (pw, p_len, sp),
            seq_o: (ow, o_len, so),
        })
    }
}

#[derive(Debug, Clone)]
pub struct BitmapTriples {
    seq_p: PackedInts,
    seq_o: PackedInts,
    bit_p: BitSequence,
    bit_o: BitSequence,
    triple_count: u64,
    subject_count: u64,
}

/// Encodes a strictly increasing triple list; widths follow the largest IDs.
pub fn encode_bitmap(triples: &[IdTriple]) -> Result<BitmapTriples> {
    let max_p = triples.iter().map(|t| t.p).max().unwrap_or(0);
    let max_o = triples.iter().map(|t| t.o).max().unwrap_or(0);
    let mut enc = BitmapEncoder::new(Default::default(), bits_for(max_p), bits_for(max_o));
    for &t in triples {
        enc.push(t)?;
    }
    BitmapTriples::from_encoded(enc.finish()?)
}

impl BitmapTriples {
    pub fn empty() -> BitmapTriples {
        encode_bitmap(&[]).expect("empty encoding")
    }

    pub fn from_encoded(e: EncodedTriples<Vec<u8>>) -> Result<BitmapTriples> {
        BitmapTriples::from_parts(
            e.triple_count,
            e.subject_count,
            BitSequence::new(Blob::from_vec(e.bit_p.1), e.bit_p.0)?,
            BitSequence::new(Blob::from_vec(e.bit_o.1), e.bit_o.0)?,
            PackedInts::new(Blob::from_vec(e.seq_p.2), e.seq_p.0, e.seq_p.1)?,
            PackedInts::new(Blob::from_vec(e.seq_o.2), e.seq_o.0, e.seq_o.1)?,
        )
    }

    /// Checks the structural invariants linking the four sequences.
    pub fn from_parts(
        triple_count: u64,
        subject_count: u64,
        bit_p: BitSequence,
        bit_o: BitSequence,
        seq_p: PackedInts,
        seq_o: PackedInts,
    ) -> Result<BitmapTriples> {
        let ok = bit_p.len() == seq_p.len()
            && bit_o.len() == seq_o.len()
            && seq_o.len() == triple_count
            && bit_p.count_ones() == subject_count
            && bit_o.count_ones() == seq_p.len()
            && (bit_p.is_empty() || bit_p.get(bit_p.len() - 1))
            && (bit_o.is_empty() || bit_o.get(bit_o.len() - 1));
        if !ok {
            return Err(Error::Corrupt("bitmap triples sequences are inconsistent".into()));
        }
        Ok(BitmapTriples { seq_p, seq_o, bit_p, bit_o, triple_count, subject_count })
    }

    pub fn len(&self) -> u64 {
        self.triple_count
    }

    pub fn is_empty(&self) -> bool {
        self.triple_count == 0
    }

    pub fn subject_count(&self) -> u64 {
        self.subject_count
    }

    pub fn seq_p(&self) -> &PackedInts {
        &self.seq_p
    }

    pub fn seq_o(&self) -> &PackedInts {
        &self.seq_o
    }

    pub fn bit_p(&self) -> &BitSequence {
        &self.bit_p
    }

    pub fn bit_o(&self) -> &BitSequence {
        &self.bit_o
    }

    /// All triples in order.
    pub fn iter(&self) -> TripleIter<'_> {
        TripleIter { bt: self, s: 1, p_pos: 0, o_pos: 0, end_o: self.triple_count }
    }

    /// (predicate, object) pairs of subject `sid`, in order.
    pub fn subject_slice(&self, sid: u64) -> Result<impl Iterator<Item = (u64, u64)> + '_> {
        if sid == 0 || sid > self.subject_count {
            return Err(Error::IdOutOfRange { id: sid, max: self.subject_count });
        }
        let p_start = if sid == 1 { 0 } else { self.select(&self.bit_p, sid - 1)? + 1 };
        let p_end = self.select(&self.bit_p, sid)? + 1;
        let o_start = if p_start == 0 { 0 } else { self.select(&self.bit_o, p_start)? + 1 };
        let o_end = self.select(&self.bit_o, p_end)? + 1;
        Ok(TripleIter { bt: self, s: sid, p_pos: p_start, o_pos: o_start, end_o: o_end }.map(|t| (t.p, t.o)))
    }

    fn select(&self, bits: &BitSequence, k: u64) -> Result<u64> {
        bits.select1(k).ok_or_else(|| Error::Corrupt(format!("missing set bit {k}")))
    }

    /// Triples matching a pattern where 0 is a wildcard.
    pub fn search(&self, pattern: IdTriple) -> Box<dyn Iterator<Item = IdTriple> + '_> {
        let IdTriple { s, p, o } = pattern;
        let keep = move |t: &IdTriple| (p == 0 || t.p == p) && (o == 0 || t.o == o);
        if s != 0 {
            match self.subject_slice(s) {
                Ok(it) => Box::new(it.map(move |(tp, to)| IdTriple::new(s, tp, to)).filter(keep)),
                Err(_) => Box::new(std::iter::empty()),
            }
        } else {
            Box::new(self.iter().filter(keep))
        }
    }
}

/// Sequential decoder over the bitmap layout.
pub struct TripleIter<'a> {
    bt: &'a BitmapTriples,
    s: u64,
    p_pos: u64,
    o_pos: u64,
    end_o: u64,
}

impl Iterator for TripleIter<'_> {
    type Item = IdTriple;

    fn next(&mut self) -> Option<IdTriple> {
        if self.o_pos >= self.end_o {
            return None;
        }
        let t = IdTriple::new(self.s, self.bt.seq_p.get(self.p_pos), self.bt.seq_o.get(self.o_pos));
        if self.bt.bit_o.get(self.o_pos) {
            if self.bt.bit_p.get(self.p_pos) {
                self.s += 1;
            }
            self.p_pos += 1;
        }
        self.o_pos += 1;
        Some(t)
    }
}
