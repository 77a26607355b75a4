//! Plain front-coded string sections.
//!
//! Entries are grouped in blocks of `block_size`. The first entry of a block
//! is stored whole as `varint(len) bytes`; every other entry is stored as
//! `varint(shared prefix with predecessor) varint(suffix len) suffix`.
//! Local IDs are 1-based positions.

use std::cmp::Ordering;
use std::io::Write;

use crate::blob::Blob;
use crate::error::{Error, Result};
use crate::meter::{Meter, MeterGuard};
use crate::term::Term;

pub const DEFAULT_BLOCK_SIZE: u32 = 16;

fn write_varint<W: Write>(sink: &mut W, v: u64) -> std::io::Result<usize> {
    leb128::write::unsigned(sink, v)
}

fn read_varint(payload: &[u8], pos: &mut usize) -> Result<u64> {
    let mut rest = payload.get(*pos..).unwrap_or(&[]);
    let before = rest.len();
    let v = leb128::read::unsigned(&mut rest).map_err(|e| match e {
        leb128::read::Error::IoError(_) => Error::Truncated("dictionary"),
        leb128::read::Error::Overflow => Error::Corrupt("varint overflow in dictionary".into()),
    })?;
    *pos += before - rest.len();
    Ok(v)
}

fn take<'a>(payload: &'a [u8], pos: &mut usize, len: u64) -> Result<&'a [u8]> {
    let end = usize::try_from(len)
        .ok()
        .and_then(|l| pos.checked_add(l))
        .filter(|&e| e <= payload.len())
        .ok_or(Error::Truncated("dictionary"))?;
    let s = &payload[*pos..end];
    *pos = end;
    Ok(s)
}

/// Decodes one entry at `pos` into `buf`, which holds the predecessor unless
/// `head` is set. Returns whether the entry sorts after its predecessor
/// (always true for heads).
fn decode_entry(payload: &[u8], pos: &mut usize, head: bool, buf: &mut Vec<u8>) -> Result<bool> {
    if head {
        let len = read_varint(payload, pos)?;
        let bytes = take(payload, pos, len)?;
        buf.clear();
        buf.extend_from_slice(bytes);
    } else {
        let shared = read_varint(payload, pos)?;
        if shared > buf.len() as u64 {
            return Err(Error::Corrupt("front-coding prefix longer than predecessor".into()));
        }
        let len = read_varint(payload, pos)?;
        let suffix = take(payload, pos, len)?;
        let shared = shared as usize;
        let greater = match (suffix.first(), buf.get(shared)) {
            (None, _) => false,
            (Some(_), None) => true,
            (Some(a), Some(b)) => a > b,
        };
        buf.truncate(shared);
        buf.extend_from_slice(suffix);
        return Ok(greater);
    }
    Ok(true)
}

/// Byte length of a block holding `entries` entries starting at `payload[0]`.
pub(crate) fn block_len(payload: &[u8], entries: u64) -> Result<usize> {
    let mut pos = 0;
    let mut buf = Vec::new();
    for i in 0..entries {
        decode_entry(payload, &mut pos, i == 0, &mut buf)?;
    }
    Ok(pos)
}

/// Streaming front coder. Entries must arrive strictly increasing.
pub struct SectionWriter<W> {
    sink: W,
    block_size: u32,
    count: u64,
    offsets: Vec<u64>,
    written: u64,
    prev: Vec<u8>,
    _guard: MeterGuard,
}

/// Everything but the payload bytes, which went to the sink.
#[derive(Debug)]
pub struct WrittenSection<W> {
    pub entry_count: u64,
    pub block_size: u32,
    pub offsets: Vec<u64>,
    pub payload_len: u64,
    pub sink: W,
}

impl<W: Write> SectionWriter<W> {
    pub fn new(sink: W, block_size: u32) -> Self {
        Self::with_meter(sink, block_size, None)
    }

    pub fn with_meter(sink: W, block_size: u32, meter: Option<&Meter>) -> Self {
        assert!(block_size > 0, "block size must be positive");
        SectionWriter {
            sink,
            block_size,
            count: 0,
            offsets: Vec::new(),
            written: 0,
            prev: Vec::new(),
            _guard: MeterGuard::new(meter, 1),
        }
    }

    pub fn len(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Appends an entry and returns its local ID.
    pub fn push(&mut self, entry: &[u8]) -> Result<u64> {
        if self.count > 0 && entry <= self.prev.as_slice() {
            return Err(Error::NotSorted(format!(
                "{:?} after {:?}",
                String::from_utf8_lossy(entry),
                String::from_utf8_lossy(&self.prev)
            )));
        }
        let mut n = 0;
        if self.count.is_multiple_of(u64::from(self.block_size)) {
            self.offsets.push(self.written);
            n += write_varint(&mut self.sink, entry.len() as u64)?;
            self.sink.write_all(entry)?;
            n += entry.len();
        } else {
            let shared = self.prev.iter().zip(entry).take_while(|(a, b)| a == b).count();
            let suffix = &entry[shared..];
            n += write_varint(&mut self.sink, shared as u64)?;
            n += write_varint(&mut self.sink, suffix.len() as u64)?;
            self.sink.write_all(suffix)?;
            n += suffix.len();
        }
        self.written += n as u64;
        self.prev.clear();
        self.prev.extend_from_slice(entry);
        self.count += 1;
        Ok(self.count)
    }

    pub fn finish(self) -> WrittenSection<W> {
        WrittenSection {
            entry_count: self.count,
            block_size: self.block_size,
            offsets: self.offsets,
            payload_len: self.written,
            sink: self.sink,
        }
    }
}

/// An immutable front-coded section.
#[derive(Debug, Clone)]
pub struct Section {
    entry_count: u64,
    block_size: u32,
    /// Block byte offsets, little-endian u64 each.
    offsets: Blob,
    payload: Blob,
}

impl Section {
    /// Builds a section from strictly increasing terms.
    pub fn build<'a, I>(terms: I, block_size: u32) -> Result<Section>
    where
        I: IntoIterator<Item = &'a Term>,
    {
        let mut w = SectionWriter::new(Vec::new(), block_size);
        for t in terms {
            w.push(t.as_bytes())?;
        }
        Ok(Section::from_written(w.finish()))
    }

    pub fn empty(block_size: u32) -> Section {
        Section::from_written(SectionWriter::new(Vec::new(), block_size).finish())
    }

    pub fn from_written(w: WrittenSection<Vec<u8>>) -> Section {
        let offsets: Vec<u8> = w.offsets.iter().flat_map(|o| o.to_le_bytes()).collect();
        Section {
            entry_count: w.entry_count,
            block_size: w.block_size,
            offsets: Blob::from_vec(offsets),
            payload: Blob::from_vec(w.sink),
        }
    }

    /// Assembles a section from stored parts, checking the block index.
    pub(crate) fn from_parts(entry_count: u64, block_size: u32, offsets: Blob, payload: Blob) -> Result<Section> {
        let blocks = offsets.len() as u64 / 8;
        if block_size == 0 || blocks != entry_count.div_ceil(u64::from(block_size.max(1))) {
            return Err(Error::Corrupt("block count does not match entry count".into()));
        }
        let mut prev = None;
        for b in 0..blocks as usize {
            let off = offsets.u64_at(b);
            if prev.map_or(off != 0, |p| off <= p) || off >= payload.len() as u64 {
                return Err(Error::Corrupt("block offsets not increasing".into()));
            }
            prev = Some(off);
        }
        Ok(Section { entry_count, block_size, offsets, payload })
    }

    pub fn len(&self) -> u64 {
        self.entry_count
    }

    pub fn is_empty(&self) -> bool {
        self.entry_count == 0
    }

    pub fn block_size(&self) -> u32 {
        self.block_size
    }

    pub fn block_count(&self) -> u64 {
        self.offsets.len() as u64 / 8
    }

    pub fn offsets(&self) -> &Blob {
        &self.offsets
    }

    pub fn payload(&self) -> &Blob {
        &self.payload
    }

    fn block_offset(&self, block: u64) -> usize {
        self.offsets.u64_at(block as usize) as usize
    }

    fn block_head(&self, block: u64, buf: &mut Vec<u8>) -> Result<usize> {
        let mut pos = self.block_offset(block);
        decode_entry(self.payload.as_slice(), &mut pos, true, buf)?;
        Ok(pos)
    }

    /// Local ID of `term`, if present.
    pub fn locate(&self, term: &Term) -> Result<Option<u64>> {
        self.locate_bytes(term.as_bytes())
    }

    pub fn locate_bytes(&self, key: &[u8]) -> Result<Option<u64>> {
        let blocks = self.block_count();
        if blocks == 0 {
            return Ok(None);
        }
        let mut buf = Vec::new();
        // last block whose head is <= key
        let (mut lo, mut hi) = (0u64, blocks);
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            self.block_head(mid, &mut buf)?;
            if buf.as_slice() <= key {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        if lo == 0 {
            return Ok(None);
        }
        let block = lo - 1;
        let payload = self.payload.as_slice();
        let first_id = block * u64::from(self.block_size) + 1;
        let last_id = (first_id + u64::from(self.block_size) - 1).min(self.entry_count);
        let mut pos = self.block_head(block, &mut buf)?;
        for id in first_id..=last_id {
            if id > first_id {
                decode_entry(payload, &mut pos, false, &mut buf)?;
            }
            match buf.as_slice().cmp(key) {
                Ordering::Equal => return Ok(Some(id)),
                Ordering::Greater => return Ok(None),
                Ordering::Less => {}
            }
        }
        Ok(None)
    }

    pub fn extract_bytes(&self, id: u64) -> Result<Vec<u8>> {
        if id == 0 || id > self.entry_count {
            return Err(Error::IdOutOfRange { id, max: self.entry_count });
        }
        let block = (id - 1) / u64::from(self.block_size);
        let index = (id - 1) % u64::from(self.block_size);
        let mut buf = Vec::new();
        let mut pos = self.block_head(block, &mut buf)?;
        for _ in 0..index {
            decode_entry(self.payload.as_slice(), &mut pos, false, &mut buf)?;
        }
        Ok(buf)
    }

    pub fn extract(&self, id: u64) -> Result<Term> {
        Term::from_canonical(self.extract_bytes(id)?)
    }

    /// Entries in order as raw bytes; holds one decoded entry at a time.
    pub fn iter_bytes(&self) -> SectionIter {
        self.iter_metered(None)
    }

    pub fn iter_metered(&self, meter: Option<&Meter>) -> SectionIter {
        SectionIter {
            section: self.clone(),
            next_id: 1,
            pos: 0,
            buf: Vec::new(),
            failed: false,
            _guard: MeterGuard::new(meter, 1),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Result<(u64, Term)>> {
        self.iter_bytes().map(|r| r.and_then(|(id, b)| Ok((id, Term::from_canonical(b)?))))
    }
}

pub struct SectionIter {
    section: Section,
    next_id: u64,
    pos: usize,
    buf: Vec<u8>,
    failed: bool,
    _guard: MeterGuard,
}

impl SectionIter {
    fn advance(&mut self) -> Result<()> {
        let head = (self.next_id - 1).is_multiple_of(u64::from(self.section.block_size));
        let payload = self.section.payload.as_slice();
        if head {
            let mut pos = self.section.block_offset((self.next_id - 1) / u64::from(self.section.block_size));
            if self.next_id > 1 && pos != self.pos {
                return Err(Error::Corrupt("block offset does not match block end".into()));
            }
            let prev = std::mem::take(&mut self.buf);
            decode_entry(payload, &mut pos, true, &mut self.buf)?;
            self.pos = pos;
            if self.next_id > 1 && self.buf <= prev {
                return Err(Error::NotSorted("section entries out of order".into()));
            }
        } else if !decode_entry(payload, &mut self.pos, false, &mut self.buf)? {
            return Err(Error::NotSorted("section entries out of order".into()));
        }
        Ok(())
    }
}

impl Iterator for SectionIter {
    type Item = Result<(u64, Vec<u8>)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.next_id > self.section.entry_count {
            return None;
        }
        if let Err(e) = self.advance() {
            self.failed = true;
            return Some(Err(e));
        }
        let id = self.next_id;
        self.next_id += 1;
        Some(Ok((id, self.buf.clone())))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.section.entry_count + 1 - self.next_id) as usize;
        (0, Some(left))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iris(names: &[&str]) -> Vec<Term> {
        names.iter().map(|n| Term::iri(n)).collect()
    }

    #[test]
    fn predicate_section_ids() {
        let sec = Section::build(&iris(&["p1", "p2"]), 16).unwrap();
        assert_eq!(sec.len(), 2);
        assert_eq!(sec.locate(&Term::iri("p1")).unwrap(), Some(1));
        assert_eq!(sec.locate(&Term::iri("p2")).unwrap(), Some(2));
        assert_eq!(sec.extract(2).unwrap(), Term::iri("p2"));
    }

    #[test]
    fn empty_section() {
        let sec = Section::build(&[], 16).unwrap();
        assert_eq!(sec.len(), 0);
        assert_eq!(sec.block_count(), 0);
        assert_eq!(sec.locate(&Term::iri("x")).unwrap(), None);
        assert_eq!(sec.iter_bytes().count(), 0);
        assert!(matches!(sec.extract(1), Err(Error::IdOutOfRange { .. })));
    }

    #[test]
    fn locate_misses() {
        let sec = Section::build(&iris(&["b", "d", "f"]), 2).unwrap();
        assert_eq!(sec.locate(&Term::iri("a")).unwrap(), None);
        assert_eq!(sec.locate(&Term::iri("c")).unwrap(), None);
        assert_eq!(sec.locate(&Term::iri("e")).unwrap(), None);
        assert_eq!(sec.locate(&Term::iri("g")).unwrap(), None);
        assert_eq!(sec.locate(&Term::iri("f")).unwrap(), Some(3));
    }

    #[test]
    fn rejects_unsorted_and_duplicates() {
        assert!(matches!(Section::build(&iris(&["b", "a"]), 4), Err(Error::NotSorted(_))));
        assert!(matches!(Section::build(&iris(&["a", "a"]), 4), Err(Error::NotSorted(_))));
    }

    #[test]
    fn front_coding_compresses_shared_prefixes() {
        let terms: Vec<Term> = (0..1000).map(|i| Term::iri(&format!("http://ex/{i:05}"))).collect();
        let raw: usize = terms.iter().map(|t| t.as_bytes().len()).sum();
        let sec = Section::build(&terms, 16).unwrap();
        assert!(sec.payload().len() < raw / 2, "{} vs {raw}", sec.payload().len());
    }

    #[test]
    fn extract_locate_exhaustive() {
        let mut terms: Vec<Term> = (0..300u32)
            .map(|i| match i % 3 {
                0 => Term::iri(&format!("http://ex/{}", i * 7919 % 1000)),
                1 => Term::literal(&format!("v{}", i * 31 % 97)),
                _ => Term::blank(&format!("b{i}")),
            })
            .collect();
        terms.sort();
        terms.dedup();
        for bs in [1, 3, 16, 1000] {
            let sec = Section::build(&terms, bs).unwrap();
            for (i, t) in terms.iter().enumerate() {
                let id = sec.locate(t).unwrap().unwrap();
                assert_eq!(id, i as u64 + 1);
                assert_eq!(&sec.extract(id).unwrap(), t);
            }
            let iterated: Vec<Term> = sec.iter().map(|r| r.unwrap().1).collect();
            let extracted: Vec<Term> = (1..=sec.len()).map(|id| sec.extract(id).unwrap()).collect();
            assert_eq!(iterated, extracted);
            assert_eq!(iterated, terms);
        }
    }

    #[test]
    fn iterator_materializes_one_entry() {
        let terms: Vec<Term> = (0..100).map(|i| Term::iri(&format!("x{i:03}"))).collect();
        let sec = Section::build(&terms, 16).unwrap();
        let meter = Meter::new();
        let mut n = 0;
        for item in sec.iter_metered(Some(&meter)) {
            item.unwrap();
            n += 1;
            assert!(meter.current() <= 16);
        }
        assert_eq!(n, 100);
        assert!(meter.peak() <= 16);
        assert_eq!(meter.current(), 0);
    }

    #[test]
    fn block_len_matches_offsets() {
        let terms = iris(&["a", "ab", "abc", "b", "bc"]);
        let sec = Section::build(&terms, 2).unwrap();
        let payload = sec.payload().as_slice();
        let last = sec.offsets().u64_at(2) as usize;
        assert_eq!(block_len(&payload[last..], 1).unwrap(), payload.len() - last);
        assert_eq!(block_len(&payload[..last], 2).unwrap(), sec.offsets().u64_at(1) as usize);
    }
}
