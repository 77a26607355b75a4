//! Splitting the terms of a triple stream into the four dictionary sections.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::term::{Term, TermTriple};

const AS_SUBJECT: u8 = 1;
const AS_OBJECT: u8 = 2;
const AS_PREDICATE: u8 = 4;

/// Sorted, deduplicated terms of each section.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Classified {
    pub shared: Vec<Term>,
    pub subjects: Vec<Term>,
    pub objects: Vec<Term>,
    pub predicates: Vec<Term>,
}

impl Classified {
    fn push(&mut self, term: Term, flags: u8) {
        if flags & AS_PREDICATE != 0 {
            self.predicates.push(term.clone());
        }
        match (flags & AS_SUBJECT != 0, flags & AS_OBJECT != 0) {
            (true, true) => self.shared.push(term),
            (true, false) => self.subjects.push(term),
            (false, true) => self.objects.push(term),
            (false, false) => {}
        }
    }
}

/// In-memory classification.
pub fn classify_terms<I>(triples: I) -> Classified
where
    I: IntoIterator<Item = TermTriple>,
{
    let mut roles: BTreeMap<Term, u8> = BTreeMap::new();
    for t in triples {
        *roles.entry(t.s).or_default() |= AS_SUBJECT;
        *roles.entry(t.p).or_default() |= AS_PREDICATE;
        *roles.entry(t.o).or_default() |= AS_OBJECT;
    }
    let mut out = Classified::default();
    for (term, flags) in roles {
        out.push(term, flags);
    }
    out
}

/// Same result as [`classify_terms`], but keeps at most `run_len` role
/// records in memory: sorted runs are spilled under `tmp_dir` and merged.
pub fn classify_terms_spilling<I>(triples: I, run_len: usize, tmp_dir: &Path) -> Result<Classified>
where
    I: IntoIterator<Item = Result<TermTriple>>,
{
    let run_len = run_len.max(3);
    let dir = tempfile::Builder::new().prefix("hdtx-classify").tempdir_in(tmp_dir)?;
    let mut runs = Vec::new();
    let mut buf: Vec<(String, u8)> = Vec::with_capacity(run_len);

    let spill = |buf: &mut Vec<(String, u8)>, runs: &mut Vec<std::path::PathBuf>| -> Result<()> {
        buf.sort_unstable();
        let path = dir.path().join(format!("run-{}", runs.len()));
        let mut w = BufWriter::new(File::create(&path)?);
        let mut i = 0;
        while i < buf.len() {
            let mut flags = buf[i].1;
            let mut j = i + 1;
            while j < buf.len() && buf[j].0 == buf[i].0 {
                flags |= buf[j].1;
                j += 1;
            }
            leb128::write::unsigned(&mut w, buf[i].0.len() as u64)?;
            w.write_all(buf[i].0.as_bytes())?;
            w.write_all(&[flags])?;
            i = j;
        }
        w.flush()?;
        runs.push(path);
        buf.clear();
        Ok(())
    };

    for t in triples {
        let t = t?;
        if buf.len() + 3 > run_len {
            spill(&mut buf, &mut runs)?;
        }
        buf.push((t.s.into_string(), AS_SUBJECT));
        buf.push((t.p.into_string(), AS_PREDICATE));
        buf.push((t.o.into_string(), AS_OBJECT));
    }
    if !buf.is_empty() {
        spill(&mut buf, &mut runs)?;
    }

    let mut readers = runs.iter().map(|p| Ok(BufReader::new(File::open(p)?))).collect::<Result<Vec<_>>>()?;
    let mut heap = BinaryHeap::new();
    for (i, r) in readers.iter_mut().enumerate() {
        if let Some((term, flags)) = read_record(r)? {
            heap.push(Reverse((term, flags, i)));
        }
    }
    let mut out = Classified::default();
    let mut current: Option<(String, u8)> = None;
    while let Some(Reverse((term, flags, i))) = heap.pop() {
        if let Some(next) = read_record(&mut readers[i])? {
            heap.push(Reverse((next.0, next.1, i)));
        }
        match &mut current {
            Some((t, f)) if *t == term => *f |= flags,
            _ => {
                if let Some((t, f)) = current.replace((term, flags)) {
                    out.push(Term::from_canonical(t.into_bytes())?, f);
                }
            }
        }
    }
    if let Some((t, f)) = current {
        out.push(Term::from_canonical(t.into_bytes())?, f);
    }
    Ok(out)
}

fn read_record<R: Read>(r: &mut R) -> Result<Option<(String, u8)>> {
    let len = match leb128::read::unsigned(r) {
        Ok(l) => l,
        Err(leb128::read::Error::IoError(e)) if e.kind() == std::io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(leb128::read::Error::IoError(e)) => return Err(e.into()),
        Err(leb128::read::Error::Overflow) => return Err(Error::Corrupt("bad spill record".into())),
    };
    let mut bytes = vec![0; len as usize];
    r.read_exact(&mut bytes)?;
    let mut flags = [0u8];
    r.read_exact(&mut flags)?;
    let term = String::from_utf8(bytes).map_err(|_| Error::Corrupt("bad spill record".into()))?;
    Ok(Some((term, flags[0])))
}
