//! Merging two documents into one without rebuilding from text.
//!
//! The merge runs in three phases:
//!
//! 1. **Dictionary.** The SO/S/O sections of each input are merged into a
//!    single sorted stream of (term, source section) entries, and the two
//!    streams are merged against each other. A term lands in the merged SO
//!    section when it is a subject somewhere and an object somewhere,
//!    otherwise in S or O. P sections are merged directly. Every source
//!    entry records where it went in a disk-backed [`SectionMapping`], and
//!    every merged subject records its source subject IDs in a
//!    [`CatSubjectMapping`]. The merged sections are front-coded straight to
//!    temporary files.
//! 2. **Triples.** For each merged subject in ID order the (predicate,
//!    object) pairs of the matching source subjects are fetched, remapped,
//!    sorted and deduplicated, and streamed into the bitmap encoder.
//! 3. **Header.** Counts are written from the merged components and the
//!    parts are concatenated into the output file.
//!
//! Only a handful of decoded terms and the current subject's triples are
//! held in memory at any time.

mod mapping;
mod merge;

pub use mapping::{CatSubjectMapping, SectionMapping, SectionMappingWriter, SubjectMapWriter};
pub use merge::{compute_common_entries, merge_sorted_streams, MergeCounts, MergeKey, MergeProbe, Merged, SortedMerge};

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use crate::bits::bits_for;
use crate::blob::Blob;
use crate::container::{write_header_part, write_section_part, write_triples_part, Counts, HdtDocument, Header, TriplesParts, MAGIC};
use crate::dictionary::{Dictionary, Section, SectionKind, SectionWriter, DEFAULT_BLOCK_SIZE};
use crate::error::{Error, Result};
use crate::meter::{Meter, MeterGuard};
use crate::triples::{BitmapEncoder, IdTriple};

use mapping::mapping_path;

#[derive(Debug, Clone)]
pub struct CatConfig {
    /// Where intermediate files go; the system temp dir when `None`.
    pub tmp_dir: Option<PathBuf>,
    pub block_size: u32,
    /// Largest per-subject triple list that may be sorted in memory.
    pub max_sublist: usize,
}

impl Default for CatConfig {
    fn default() -> Self {
        CatConfig { tmp_dir: None, block_size: DEFAULT_BLOCK_SIZE, max_sublist: 1 << 24 }
    }
}

#[derive(Debug, Clone, Default)]
pub struct CatStats {
    pub counts: Counts,
    /// Terms found in both inputs, keyed by (section in first, section in second).
    pub common: BTreeMap<(SectionKind, SectionKind), u64>,
    /// Counters of every two-way merge that ran, by name.
    pub merges: Vec<(String, MergeCounts)>,
    /// Largest per-subject list before deduplication.
    pub peak_sublist: usize,
    /// Peak number of decoded terms plus buffered triples.
    pub peak_resident: usize,
    pub bytes_written: u64,
    pub elapsed: Duration,
}

/// One merged section, front-coded into a temporary file.
#[derive(Debug)]
pub struct MergedSection {
    pub entry_count: u64,
    pub block_size: u32,
    pub offsets: Vec<u64>,
    pub payload: PathBuf,
}

impl MergedSection {
    fn create(path: PathBuf, block_size: u32, meter: &Meter) -> Result<SectionWriter<BufWriter<File>>> {
        Ok(SectionWriter::with_meter(BufWriter::new(File::create(path)?), block_size, Some(meter)))
    }

    fn finish(w: SectionWriter<BufWriter<File>>, payload: PathBuf) -> Result<MergedSection> {
        let w = w.finish();
        let mut sink = w.sink;
        sink.flush()?;
        Ok(MergedSection { entry_count: w.entry_count, block_size: w.block_size, offsets: w.offsets, payload })
    }

    /// Loads the section for inspection.
    pub fn load(&self) -> Result<Section> {
        let offsets: Vec<u8> = self.offsets.iter().flat_map(|o| o.to_le_bytes()).collect();
        Section::from_parts(self.entry_count, self.block_size, Blob::from_vec(offsets), Blob::map_file(&self.payload)?)
    }
}

/// Output of the dictionary phase.
#[derive(Debug)]
pub struct CatDictionary {
    pub shared: MergedSection,
    pub subjects: MergedSection,
    pub objects: MergedSection,
    pub predicates: MergedSection,
    /// `mappings[f][k]` maps section `k` of input `f`.
    pub mappings: [[SectionMapping; 4]; 2],
    /// Merged subject ID to input subject ID, per input.
    pub subject_maps: [CatSubjectMapping; 2],
    pub common: BTreeMap<(SectionKind, SectionKind), u64>,
    pub merges: Vec<(String, MergeCounts)>,
}

fn kind_index(k: SectionKind) -> usize {
    match k {
        SectionKind::Shared => 0,
        SectionKind::Subjects => 1,
        SectionKind::Objects => 2,
        SectionKind::Predicates => 3,
    }
}

impl CatDictionary {
    pub fn mapping(&self, file: usize, kind: SectionKind) -> &SectionMapping {
        &self.mappings[file][kind_index(kind)]
    }

    pub fn load(&self) -> Result<Dictionary> {
        Ok(Dictionary {
            shared: self.shared.load()?,
            subjects: self.subjects.load()?,
            objects: self.objects.load()?,
            predicates: self.predicates.load()?,
        })
    }

    pub fn subject_count(&self) -> u64 {
        self.shared.entry_count + self.subjects.entry_count
    }

    pub fn object_count(&self) -> u64 {
        self.shared.entry_count + self.objects.entry_count
    }
}

/// A dictionary entry on its way through the merge.
struct SourceEntry {
    kind: SectionKind,
    id: u64,
    term: Vec<u8>,
    _guard: MeterGuard,
}

impl MergeKey for SourceEntry {
    fn merge_key(&self) -> &[u8] {
        &self.term
    }
}

type EntryStream<'a> = Box<dyn Iterator<Item = Result<SourceEntry>> + 'a>;

fn section_stream<'a>(sec: &Section, kind: SectionKind, meter: &'a Meter) -> EntryStream<'a> {
    Box::new(sec.iter_metered(Some(meter)).map(move |r| {
        r.map(|(id, term)| SourceEntry { kind, id, term, _guard: MeterGuard::new(Some(meter), 1) })
    }))
}

/// Merges two disjoint sections of the same input.
fn disjoint_merge<'a>(a: EntryStream<'a>, b: EntryStream<'a>, meter: &'a Meter, name: String, probes: &mut Vec<(String, MergeProbe)>) -> EntryStream<'a> {
    let m = SortedMerge::new(a, b).metered(Some(meter));
    probes.push((name, m.probe()));
    Box::new(m.map(|r| match r? {
        Merged::Left(e) | Merged::Right(e) => Ok(e),
        Merged::Both(x, _) => Err(Error::Corrupt(format!(
            "{} appears in two dictionary sections of one input",
            String::from_utf8_lossy(&x.term)
        ))),
    }))
}

/// Every subject or object term of a dictionary, in order, tagged with its section.
fn node_stream<'a>(d: &Dictionary, file: usize, meter: &'a Meter, probes: &mut Vec<(String, MergeProbe)>) -> EntryStream<'a> {
    let n = file + 1;
    let so_s = disjoint_merge(
        section_stream(&d.shared, SectionKind::Shared, meter),
        section_stream(&d.subjects, SectionKind::Subjects, meter),
        meter,
        format!("SO{n}+S{n}"),
        probes,
    );
    disjoint_merge(so_s, section_stream(&d.objects, SectionKind::Objects, meter), meter, format!("SO{n}+S{n}+O{n}"), probes)
}

fn is_subject(e: &SourceEntry) -> bool {
    matches!(e.kind, SectionKind::Shared | SectionKind::Subjects)
}

fn is_object(e: &SourceEntry) -> bool {
    matches!(e.kind, SectionKind::Shared | SectionKind::Objects)
}

/// Subject ID of an entry in its own input, if it is a subject there.
fn source_subject_id(e: Option<&SourceEntry>, shared_len: u64) -> Option<u64> {
    match e? {
        SourceEntry { kind: SectionKind::Shared, id, .. } => Some(*id),
        SourceEntry { kind: SectionKind::Subjects, id, .. } => Some(shared_len + id),
        _ => None,
    }
}

fn mapping_writers(dir: &Path, file: usize) -> Result<[SectionMappingWriter; 4]> {
    let n = file + 1;
    Ok([
        SectionMappingWriter::create(mapping_path(dir, &format!("SO{n}")))?,
        SectionMappingWriter::create(mapping_path(dir, &format!("S{n}")))?,
        SectionMappingWriter::create(mapping_path(dir, &format!("O{n}")))?,
        SectionMappingWriter::create(mapping_path(dir, &format!("P{n}")))?,
    ])
}

fn finish_mappings(ws: [SectionMappingWriter; 4]) -> Result<[SectionMapping; 4]> {
    let [a, b, c, d] = ws;
    Ok([a.finish()?, b.finish()?, c.finish()?, d.finish()?])
}

/// Phase 1: merges the dictionaries into `dir`.
pub fn cat_dictionary(d1: &Dictionary, d2: &Dictionary, dir: &Path, block_size: u32, meter: &Meter) -> Result<CatDictionary> {
    let docs = [d1, d2];
    let mut probes = Vec::new();
    let mut maps = [mapping_writers(dir, 0)?, mapping_writers(dir, 1)?];
    let mut subject_maps = [
        [SubjectMapWriter::create(dir.join("cat1-so.map"))?, SubjectMapWriter::create(dir.join("cat1-s.map"))?],
        [SubjectMapWriter::create(dir.join("cat2-so.map"))?, SubjectMapWriter::create(dir.join("cat2-s.map"))?],
    ];
    let paths = ["SO", "S", "O", "P"].map(|n| dir.join(format!("{n}-cat.pfc")));
    let mut shared = MergedSection::create(paths[0].clone(), block_size, meter)?;
    let mut subjects = MergedSection::create(paths[1].clone(), block_size, meter)?;
    let mut objects = MergedSection::create(paths[2].clone(), block_size, meter)?;
    let mut common = BTreeMap::new();

    let nodes = SortedMerge::new(node_stream(d1, 0, meter, &mut probes), node_stream(d2, 1, meter, &mut probes)).metered(Some(meter));
    probes.push(("nodes1+nodes2".to_string(), nodes.probe()));
    for item in nodes {
        let item = item?;
        if let Merged::Both(a, b) = &item {
            *common.entry((a.kind, b.kind)).or_insert(0) += 1;
        }
        let (e1, e2) = (item.left(), item.right());
        let subj = e1.is_some_and(is_subject) || e2.is_some_and(is_subject);
        let obj = e1.is_some_and(is_object) || e2.is_some_and(is_object);
        let (target, id) = match (subj, obj) {
            (true, true) => (SectionKind::Shared, shared.push(item.key())?),
            (true, false) => (SectionKind::Subjects, subjects.push(item.key())?),
            (false, true) => (SectionKind::Objects, objects.push(item.key())?),
            (false, false) => unreachable!("node entries are subjects or objects"),
        };
        for (file, e) in [e1, e2].into_iter().enumerate() {
            if let Some(e) = e {
                maps[file][kind_index(e.kind)].push(target, id)?;
            }
            if target != SectionKind::Objects {
                let part = usize::from(target == SectionKind::Subjects);
                subject_maps[file][part].push(source_subject_id(e, docs[file].shared.len()))?;
            }
        }
    }

    let mut predicates = MergedSection::create(paths[3].clone(), block_size, meter)?;
    let preds = SortedMerge::new(
        section_stream(&d1.predicates, SectionKind::Predicates, meter),
        section_stream(&d2.predicates, SectionKind::Predicates, meter),
    )
    .metered(Some(meter));
    probes.push(("P1+P2".to_string(), preds.probe()));
    for item in preds {
        let item = item?;
        let id = predicates.push(item.key())?;
        if item.left().is_some() {
            maps[0][3].push(SectionKind::Predicates, id)?;
        }
        if item.right().is_some() {
            maps[1][3].push(SectionKind::Predicates, id)?;
        }
        if let Merged::Both(..) = item {
            *common.entry((SectionKind::Predicates, SectionKind::Predicates)).or_insert(0) += 1;
        }
    }

    let [m1, m2] = maps;
    let [[so1, s1], [so2, s2]] = subject_maps;
    let cat = CatDictionary {
        shared: MergedSection::finish(shared, paths[0].clone())?,
        subjects: MergedSection::finish(subjects, paths[1].clone())?,
        objects: MergedSection::finish(objects, paths[2].clone())?,
        predicates: MergedSection::finish(predicates, paths[3].clone())?,
        mappings: [finish_mappings(m1)?, finish_mappings(m2)?],
        subject_maps: [CatSubjectMapping::from_writers(so1, s1)?, CatSubjectMapping::from_writers(so2, s2)?],
        common,
        merges: probes.into_iter().map(|(n, p)| (n, p.get())).collect(),
    };
    for (f, d) in docs.into_iter().enumerate() {
        for kind in SectionKind::ALL {
            if cat.mapping(f, kind).len() != d.section(kind).len() {
                return Err(Error::MappingIncomplete(format!("{kind}{} has {} entries but {} mappings", f + 1, d.section(kind).len(), cat.mapping(f, kind).len())));
            }
        }
    }
    Ok(cat)
}

/// Phase 2: the merged triples in order, one subject at a time.
pub struct CatTriples<'a> {
    sources: [&'a HdtDocument; 2],
    dict: &'a CatDictionary,
    subject: u64,
    subjects: u64,
    buf: std::vec::IntoIter<(u64, u64)>,
    guard: MeterGuard,
    max_sublist: usize,
    peak_sublist: usize,
    failed: bool,
}

impl<'a> CatTriples<'a> {
    pub fn new(d1: &'a HdtDocument, d2: &'a HdtDocument, dict: &'a CatDictionary, meter: Option<&Meter>, max_sublist: usize) -> Self {
        CatTriples {
            sources: [d1, d2],
            dict,
            subject: 0,
            subjects: dict.subject_count(),
            buf: Vec::new().into_iter(),
            guard: MeterGuard::new(meter, 0),
            max_sublist,
            peak_sublist: 0,
            failed: false,
        }
    }

    /// Largest sublist seen so far, before deduplication.
    pub fn peak_sublist(&self) -> usize {
        self.peak_sublist
    }

    fn map_predicate(&self, f: usize, p: u64) -> Result<u64> {
        match self.dict.mapping(f, SectionKind::Predicates).get(p)? {
            (SectionKind::Predicates, id) => Ok(id),
            (k, _) => Err(Error::MappingIncomplete(format!("predicate {p} of input {} mapped to {k}", f + 1))),
        }
    }

    fn map_object(&self, f: usize, o: u64) -> Result<u64> {
        let shared_len = self.sources[f].dictionary.shared.len();
        let (kind, local) = if o <= shared_len { (SectionKind::Shared, o) } else { (SectionKind::Objects, o - shared_len) };
        match self.dict.mapping(f, kind).get(local)? {
            (SectionKind::Shared, id) => Ok(id),
            (SectionKind::Objects, id) => Ok(self.dict.shared.entry_count + id),
            (k, _) => Err(Error::MappingIncomplete(format!("object {o} of input {} mapped to {k}", f + 1))),
        }
    }

    fn fill(&mut self, s: u64) -> Result<()> {
        let mut list = Vec::new();
        for f in 0..2 {
            let Some(src) = self.dict.subject_maps[f].get(s)? else { continue };
            for (p, o) in self.sources[f].triples.subject_slice(src)? {
                if list.len() == self.max_sublist {
                    return Err(Error::CapacityExceeded(format!("subject {s} has more than {} triples", self.max_sublist)));
                }
                list.push((self.map_predicate(f, p)?, self.map_object(f, o)?));
                self.guard.set(list.len());
            }
        }
        if list.is_empty() {
            return Err(Error::Corrupt(format!("merged subject {s} has no triples")));
        }
        self.peak_sublist = self.peak_sublist.max(list.len());
        list.sort_unstable();
        list.dedup();
        self.guard.set(list.len());
        self.buf = list.into_iter();
        Ok(())
    }
}

impl Iterator for CatTriples<'_> {
    type Item = Result<IdTriple>;

    fn next(&mut self) -> Option<Result<IdTriple>> {
        if self.failed {
            return None;
        }
        loop {
            if let Some((p, o)) = self.buf.next() {
                self.guard.set(self.buf.len());
                return Some(Ok(IdTriple::new(self.subject, p, o)));
            }
            if self.subject == self.subjects {
                return None;
            }
            self.subject += 1;
            if let Err(e) = self.fill(self.subject) {
                self.failed = true;
                return Some(Err(e));
            }
        }
    }
}

/// Phase 2 as a stream; see [`CatTriples`].
pub fn cat_triples<'a>(d1: &'a HdtDocument, d2: &'a HdtDocument, dict: &'a CatDictionary, max_sublist: usize) -> CatTriples<'a> {
    CatTriples::new(d1, d2, dict, None, max_sublist)
}

fn reopen(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

/// Merges two open documents and writes the result to `sink`.
pub fn cat_documents<W: Write + ?Sized>(d1: &HdtDocument, d2: &HdtDocument, sink: &mut W, config: &CatConfig) -> Result<CatStats> {
    let start = Instant::now();
    let tmp = match &config.tmp_dir {
        Some(dir) => tempfile::Builder::new().prefix("hdtx-cat").tempdir_in(dir)?,
        None => tempfile::Builder::new().prefix("hdtx-cat").tempdir()?,
    };
    let dir = tmp.path();
    let meter = Meter::new();

    let dict = cat_dictionary(&d1.dictionary, &d2.dictionary, dir, config.block_size, &meter)?;

    let names = ["bitp", "bito", "seqp", "seqo"].map(|n| dir.join(format!("{n}.bin")));
    let sinks = [0, 1, 2, 3].map(|i| File::create(&names[i]).map(BufWriter::new));
    let [a, b, c, d] = sinks;
    let p_width = bits_for(dict.predicates.entry_count);
    let o_width = bits_for(dict.object_count());
    let mut enc = BitmapEncoder::new([a?, b?, c?, d?], p_width, o_width);
    let mut triples = CatTriples::new(d1, d2, &dict, Some(&meter), config.max_sublist);
    for t in triples.by_ref() {
        enc.push(t?)?;
    }
    let peak_sublist = triples.peak_sublist();
    drop(triples);
    let encoded = enc.finish()?;
    for mut w in [encoded.bit_p.1, encoded.bit_o.1, encoded.seq_p.2, encoded.seq_o.2] {
        w.flush()?;
    }
    if encoded.subject_count != dict.subject_count() {
        return Err(Error::Corrupt(format!("{} merged subjects but {} in dictionary", encoded.subject_count, dict.subject_count())));
    }

    let counts = Counts {
        triples: encoded.triple_count,
        subjects: dict.subject_count(),
        predicates: dict.predicates.entry_count,
        objects: dict.object_count(),
        shared: dict.shared.entry_count,
    };
    sink.write_all(MAGIC)?;
    let mut bytes = MAGIC.len() as u64;
    bytes += write_header_part(sink, &Header::from_counts(counts))?;
    for sec in [&dict.shared, &dict.subjects, &dict.objects, &dict.predicates] {
        bytes += write_section_part(sink, sec.entry_count, sec.block_size, &sec.offsets, &mut reopen(&sec.payload)?)?;
    }
    bytes += write_triples_part(
        sink,
        TriplesParts {
            triple_count: encoded.triple_count,
            subject_count: encoded.subject_count,
            bit_p: (encoded.bit_p.0, &mut reopen(&names[0])?),
            bit_o: (encoded.bit_o.0, &mut reopen(&names[1])?),
            seq_p: (encoded.seq_p.0, &mut reopen(&names[2])?),
            seq_o: (encoded.seq_o.0, &mut reopen(&names[3])?),
        },
    )?;
    sink.flush()?;

    Ok(CatStats {
        counts,
        common: dict.common.clone(),
        merges: dict.merges.clone(),
        peak_sublist,
        peak_resident: meter.peak(),
        bytes_written: bytes,
        elapsed: start.elapsed(),
    })
}

/// Merges the files at `a` and `b` into `out`. The output is written to a
/// temporary file beside `out` and renamed into place on success.
pub fn hdt_cat(a: &Path, b: &Path, out: &Path, config: &CatConfig) -> Result<CatStats> {
    let d1 = HdtDocument::open(a)?;
    let d2 = HdtDocument::open(b)?;
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut file = tempfile::NamedTempFile::new_in(parent)?;
    let stats = {
        let mut w = BufWriter::new(file.as_file_mut());
        let stats = cat_documents(&d1, &d2, &mut w, config)?;
        w.flush()?;
        stats
    };
    file.persist(out).map_err(|e| Error::Io(e.error))?;
    Ok(stats)
}
