//! The HDTX-1 file layout.
//!
//! All integers are little-endian.
//!
//! ```text
//! magic      "HDTX0001"
//! header     u32 len | len bytes of `key=value\n` lines | u32 crc
//! section x4 (SO, S, O, P)
//!            u64 entries | u32 block size | u64 blocks | blocks x u64 offsets
//!            | front-coded payload | u32 crc
//! triples    u64 triples | u64 subjects
//!            | u64 bits | words (bit_p) | u64 bits | words (bit_o)
//!            | u8 width | words (seq_p) | u8 width | words (seq_o) | u32 crc
//! ```
//!
//! Each CRC-32 covers every byte of its part before the checksum itself.

use std::fmt;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::bits::{words_for_bits, BitSequence, PackedInts};
use crate::blob::Blob;
use crate::dictionary::{block_len, Dictionary, Role, Section, SectionKind};
use crate::error::{Error, Result};
use crate::term::{Graph, Term, TermTriple};
use crate::triples::{BitmapTriples, IdTriple};

pub const MAGIC: &[u8; 8] = b"HDTX0001";
pub const FORMAT_VERSION: &str = "1";

pub const KEY_FORMAT_VERSION: &str = "format-version";
pub const KEY_TRIPLES: &str = "triple-count";
pub const KEY_SUBJECTS: &str = "distinct-subjects";
pub const KEY_PREDICATES: &str = "distinct-predicates";
pub const KEY_OBJECTS: &str = "distinct-objects";
pub const KEY_SHARED: &str = "shared-count";

/// Statistics recorded in the header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Counts {
    pub triples: u64,
    pub subjects: u64,
    pub predicates: u64,
    pub objects: u64,
    pub shared: u64,
}

/// Ordered `key=value` metadata.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Header {
    entries: Vec<(String, String)>,
}

impl Header {
    pub fn from_counts(c: Counts) -> Header {
        let entries = [
            (KEY_FORMAT_VERSION, FORMAT_VERSION.to_string()),
            (KEY_TRIPLES, c.triples.to_string()),
            (KEY_SUBJECTS, c.subjects.to_string()),
            (KEY_PREDICATES, c.predicates.to_string()),
            (KEY_OBJECTS, c.objects.to_string()),
            (KEY_SHARED, c.shared.to_string()),
        ];
        Header { entries: entries.into_iter().map(|(k, v)| (k.to_string(), v)).collect() }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    fn count(&self, key: &str) -> Result<u64> {
        let v = self.get(key).ok_or_else(|| Error::Corrupt(format!("header lacks {key}")))?;
        v.parse().map_err(|_| Error::Corrupt(format!("header {key}={v} is not a count")))
    }

    pub fn counts(&self) -> Result<Counts> {
        Ok(Counts {
            triples: self.count(KEY_TRIPLES)?,
            subjects: self.count(KEY_SUBJECTS)?,
            predicates: self.count(KEY_PREDICATES)?,
            objects: self.count(KEY_OBJECTS)?,
            shared: self.count(KEY_SHARED)?,
        })
    }

    pub fn to_text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Unknown keys are kept but otherwise ignored.
    pub fn parse(text: &str) -> Result<Header> {
        let mut entries = Vec::new();
        for line in text.lines() {
            let (k, v) = line.split_once('=').ok_or_else(|| Error::Corrupt(format!("header line {line:?}")))?;
            entries.push((k.to_string(), v.to_string()));
        }
        let header = Header { entries };
        match header.get(KEY_FORMAT_VERSION) {
            Some(FORMAT_VERSION) => {}
            Some(v) => return Err(Error::VersionUnsupported(v.to_string())),
            None => return Err(Error::Corrupt("header lacks format-version".into())),
        }
        header.counts()?;
        Ok(header)
    }
}

impl fmt::Display for Header {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

/// Statistics computed from the components themselves.
pub fn build_header(dict: &Dictionary, triples: &BitmapTriples) -> Header {
    Header::from_counts(Counts {
        triples: triples.len(),
        subjects: dict.subject_count(),
        predicates: dict.predicate_count(),
        objects: dict.object_count(),
        shared: dict.shared.len(),
    })
}

#[derive(Debug, Clone)]
pub struct HdtDocument {
    pub header: Header,
    pub dictionary: Dictionary,
    pub triples: BitmapTriples,
}

impl HdtDocument {
    /// Checks the cross-component invariants and derives the header.
    pub fn new(dictionary: Dictionary, triples: BitmapTriples) -> Result<HdtDocument> {
        if triples.subject_count() != dictionary.subject_count() {
            return Err(Error::Corrupt(format!(
                "{} subjects in triples, {} in dictionary",
                triples.subject_count(),
                dictionary.subject_count()
            )));
        }
        let header = build_header(&dictionary, &triples);
        Ok(HdtDocument { header, dictionary, triples })
    }

    pub fn empty(block_size: u32) -> HdtDocument {
        HdtDocument::new(Dictionary::empty(block_size), BitmapTriples::empty()).expect("empty document")
    }

    /// Memory-maps and validates a file.
    pub fn open(path: &Path) -> Result<HdtDocument> {
        read_document(Blob::map_file(path)?)
    }

    pub fn from_bytes(bytes: Vec<u8>) -> Result<HdtDocument> {
        read_document(Blob::from_vec(bytes))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        write_document(self, &mut out).expect("writing to a Vec");
        out
    }

    pub fn counts(&self) -> Counts {
        self.header.counts().expect("validated header")
    }

    pub fn id_triple_to_terms(&self, t: IdTriple) -> Result<TermTriple> {
        Ok(TermTriple {
            s: self.dictionary.id_to_term(Role::Subject, t.s)?,
            p: self.dictionary.id_to_term(Role::Predicate, t.p)?,
            o: self.dictionary.id_to_term(Role::Object, t.o)?,
        })
    }

    /// All triples as terms, in ID order.
    pub fn term_triples(&self) -> impl Iterator<Item = Result<TermTriple>> + '_ {
        self.triples.iter().map(|t| self.id_triple_to_terms(t))
    }

    pub fn graph(&self) -> Result<Graph> {
        self.term_triples().collect()
    }

    /// Term-level pattern search; `None` is a wildcard. Unknown terms match
    /// nothing.
    pub fn search_terms(
        &self,
        s: Option<&Term>,
        p: Option<&Term>,
        o: Option<&Term>,
    ) -> Result<Box<dyn Iterator<Item = Result<TermTriple>> + '_>> {
        let lookup = |role, t: Option<&Term>| -> Result<Option<u64>> {
            match t {
                None => Ok(Some(0)),
                Some(t) => self.dictionary.global_id(role, t),
            }
        };
        let ids = (lookup(Role::Subject, s)?, lookup(Role::Predicate, p)?, lookup(Role::Object, o)?);
        let (Some(s), Some(p), Some(o)) = ids else {
            return Ok(Box::new(std::iter::empty()));
        };
        Ok(Box::new(self.triples.search(IdTriple::new(s, p, o)).map(|t| self.id_triple_to_terms(t))))
    }
}

/// Hashes and counts everything written through it.
pub(crate) struct CrcWriter<'a, W: ?Sized> {
    inner: &'a mut W,
    hasher: crc32fast::Hasher,
    written: u64,
}

impl<'a, W: Write + ?Sized> CrcWriter<'a, W> {
    pub(crate) fn new(inner: &'a mut W) -> Self {
        CrcWriter { inner, hasher: crc32fast::Hasher::new(), written: 0 }
    }

    /// Appends the checksum; returns total bytes written including it.
    pub(crate) fn finish(self) -> io::Result<u64> {
        let crc = self.hasher.finalize();
        self.inner.write_all(&crc.to_le_bytes())?;
        Ok(self.written + 4)
    }
}

impl<W: Write + ?Sized> Write for CrcWriter<'_, W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.written += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

pub(crate) fn write_header_part<W: Write + ?Sized>(out: &mut W, header: &Header) -> io::Result<u64> {
    let text = header.to_text();
    let mut w = CrcWriter::new(out);
    w.write_all(&(text.len() as u32).to_le_bytes())?;
    w.write_all(text.as_bytes())?;
    w.finish()
}

pub(crate) fn write_section_part<W: Write + ?Sized>(
    out: &mut W,
    entry_count: u64,
    block_size: u32,
    offsets: &[u64],
    payload: &mut dyn Read,
) -> io::Result<u64> {
    let mut w = CrcWriter::new(out);
    w.write_all(&entry_count.to_le_bytes())?;
    w.write_all(&block_size.to_le_bytes())?;
    w.write_all(&(offsets.len() as u64).to_le_bytes())?;
    for o in offsets {
        w.write_all(&o.to_le_bytes())?;
    }
    io::copy(payload, &mut w)?;
    w.finish()
}

/// Lengths and readers for the four triple streams.
pub(crate) struct TriplesParts<'a> {
    pub triple_count: u64,
    pub subject_count: u64,
    pub bit_p: (u64, &'a mut dyn Read),
    pub bit_o: (u64, &'a mut dyn Read),
    pub seq_p: (u8, &'a mut dyn Read),
    pub seq_o: (u8, &'a mut dyn Read),
}

pub(crate) fn write_triples_part<W: Write + ?Sized>(out: &mut W, parts: TriplesParts<'_>) -> io::Result<u64> {
    let mut w = CrcWriter::new(out);
    w.write_all(&parts.triple_count.to_le_bytes())?;
    w.write_all(&parts.subject_count.to_le_bytes())?;
    for (len, r) in [parts.bit_p, parts.bit_o] {
        w.write_all(&len.to_le_bytes())?;
        io::copy(r, &mut w)?;
    }
    for (width, r) in [parts.seq_p, parts.seq_o] {
        w.write_all(&[width])?;
        io::copy(r, &mut w)?;
    }
    w.finish()
}

fn write_section<W: Write + ?Sized>(out: &mut W, sec: &Section) -> io::Result<u64> {
    let offsets: Vec<u64> = (0..sec.block_count() as usize).map(|i| sec.offsets().u64_at(i)).collect();
    write_section_part(out, sec.len(), sec.block_size(), &offsets, &mut sec.payload().as_slice())
}

/// Serializes `doc`; returns the number of bytes written.
pub fn write_document<W: Write + ?Sized>(doc: &HdtDocument, sink: &mut W) -> Result<u64> {
    sink.write_all(MAGIC)?;
    let mut n = MAGIC.len() as u64;
    n += write_header_part(sink, &doc.header)?;
    for kind in SectionKind::ALL {
        n += write_section(sink, doc.dictionary.section(kind))?;
    }
    let t = &doc.triples;
    n += write_triples_part(
        sink,
        TriplesParts {
            triple_count: t.len(),
            subject_count: t.subject_count(),
            bit_p: (t.bit_p().len(), &mut t.bit_p().words().as_slice()),
            bit_o: (t.bit_o().len(), &mut t.bit_o().words().as_slice()),
            seq_p: (t.seq_p().width(), &mut t.seq_p().data().as_slice()),
            seq_o: (t.seq_o().width(), &mut t.seq_o().data().as_slice()),
        },
    )?;
    Ok(n)
}

struct Cursor<'a> {
    blob: &'a Blob,
    pos: usize,
    part: &'static str,
}

impl Cursor<'_> {
    fn take(&mut self, n: u64) -> Result<Blob> {
        let end = usize::try_from(n)
            .ok()
            .and_then(|n| self.pos.checked_add(n))
            .filter(|&e| e <= self.blob.len())
            .ok_or(Error::Truncated(self.part))?;
        let b = self.blob.slice(self.pos..end)?;
        self.pos = end;
        Ok(b)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?.as_slice()[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.as_slice().try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.as_slice().try_into().expect("8 bytes")))
    }

    fn verify_crc(&mut self, start: usize) -> Result<()> {
        let end = self.pos;
        let stored = self.u32()?;
        if crc32fast::hash(&self.blob.as_slice()[start..end]) != stored {
            return Err(Error::ChecksumMismatch(self.part));
        }
        Ok(())
    }

    fn words_for(&mut self, bits: Option<u64>) -> Result<Blob> {
        let words = bits.and_then(words_for_bits).ok_or_else(|| Error::Corrupt(format!("{} length overflow", self.part)))?;
        self.take(words.checked_mul(8).ok_or(Error::Truncated(self.part))?)
    }
}

fn read_section(c: &mut Cursor<'_>) -> Result<Section> {
    let start = c.pos;
    let entry_count = c.u64()?;
    let block_size = c.u32()?;
    let blocks = c.u64()?;
    let offsets = c.take(blocks.checked_mul(8).ok_or(Error::Truncated(c.part))?)?;
    let payload_start = c.pos;
    let mut payload_len = 0;
    if blocks > 0 {
        let last = offsets.u64_at(blocks as usize - 1);
        let in_last = (blocks - 1)
            .checked_mul(u64::from(block_size))
            .and_then(|before| entry_count.checked_sub(before))
            .filter(|&n| n >= 1 && n <= u64::from(block_size))
            .ok_or_else(|| Error::Corrupt(format!("{} block count does not match entries", c.part)))?;
        let rest = &c.blob.as_slice()[payload_start..];
        let last = usize::try_from(last).ok().filter(|&l| l < rest.len()).ok_or(Error::Truncated(c.part))?;
        payload_len = last + block_len(&rest[last..], in_last).map_err(|e| match e {
            Error::Truncated(_) => Error::Truncated(c.part),
            other => other,
        })?;
    }
    let payload = c.take(payload_len as u64)?;
    c.verify_crc(start)?;
    Section::from_parts(entry_count, block_size, offsets, payload)
}

fn read_triples(c: &mut Cursor<'_>) -> Result<BitmapTriples> {
    let start = c.pos;
    let triple_count = c.u64()?;
    let subject_count = c.u64()?;
    let bit_p_len = c.u64()?;
    let bit_p = c.words_for(Some(bit_p_len))?;
    let bit_o_len = c.u64()?;
    let bit_o = c.words_for(Some(bit_o_len))?;
    let p_width = c.u8()?;
    let seq_p = c.words_for(bit_p_len.checked_mul(u64::from(p_width)))?;
    let o_width = c.u8()?;
    let seq_o = c.words_for(bit_o_len.checked_mul(u64::from(o_width)))?;
    c.verify_crc(start)?;
    BitmapTriples::from_parts(
        triple_count,
        subject_count,
        BitSequence::new(bit_p, bit_p_len)?,
        BitSequence::new(bit_o, bit_o_len)?,
        PackedInts::new(seq_p, p_width, bit_p_len)?,
        PackedInts::new(seq_o, o_width, bit_o_len)?,
    )
}

/// Parses and validates a complete file image.
pub fn read_document(source: Blob) -> Result<HdtDocument> {
    let bytes = source.as_slice();
    if bytes.len() < MAGIC.len() || &bytes[..4] != b"HDTX" {
        return Err(Error::BadMagic);
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::VersionUnsupported(String::from_utf8_lossy(&bytes[4..8]).into_owned()));
    }
    let mut c = Cursor { blob: &source, pos: MAGIC.len(), part: "header" };

    let start = c.pos;
    let len = c.u32()?;
    let text = c.take(u64::from(len))?;
    c.verify_crc(start)?;
    let text = std::str::from_utf8(text.as_slice()).map_err(|_| Error::Corrupt("header is not UTF-8".into()))?;
    let header = Header::parse(text)?;

    let mut sections = Vec::with_capacity(4);
    for kind in SectionKind::ALL {
        c.part = kind.name();
        sections.push(read_section(&mut c)?);
    }
    let mut sections = sections.into_iter();
    let mut next = || sections.next().expect("four sections");
    let dictionary = Dictionary { shared: next(), subjects: next(), objects: next(), predicates: next() };

    c.part = "triples";
    let triples = read_triples(&mut c)?;
    if c.pos != source.len() {
        return Err(Error::Corrupt(format!("{} trailing bytes", source.len() - c.pos)));
    }

    let doc = HdtDocument::new(dictionary, triples)?;
    if doc.header.counts()? != header.counts()? {
        return Err(Error::Corrupt("header statistics disagree with contents".into()));
    }
    Ok(HdtDocument { header, ..doc })
}
