//! Disk-backed ID translation arrays.
//!
//! Section mappings are files of 9-byte records (`u8` section tag, `u64`
//! target ID, little-endian), one per source local ID. Subject mappings are
//! files of `u64` source subject IDs, 0 meaning absent.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::blob::Blob;
use crate::dictionary::SectionKind;
use crate::error::{Error, Result};

const SECTION_RECORD: usize = 9;

struct RecordFile {
    out: BufWriter<File>,
    path: PathBuf,
    records: u64,
}

impl RecordFile {
    fn create(path: PathBuf) -> Result<RecordFile> {
        Ok(RecordFile { out: BufWriter::new(File::create(&path)?), path, records: 0 })
    }

    fn finish(mut self) -> Result<(Blob, u64)> {
        self.out.flush()?;
        drop(self.out);
        Ok((Blob::map_file(&self.path)?, self.records))
    }
}

pub struct SectionMappingWriter(RecordFile);

impl SectionMappingWriter {
    pub fn create(path: PathBuf) -> Result<Self> {
        Ok(SectionMappingWriter(RecordFile::create(path)?))
    }

    /// Records the target of the next source ID.
    pub fn push(&mut self, target: SectionKind, id: u64) -> Result<()> {
        self.0.out.write_all(&[target.tag()])?;
        self.0.out.write_all(&id.to_le_bytes())?;
        self.0.records += 1;
        Ok(())
    }

    pub fn finish(self) -> Result<SectionMapping> {
        let (data, len) = self.0.finish()?;
        Ok(SectionMapping { data, len })
    }
}

/// Source local ID to (merged section, local ID in that section).
#[derive(Debug, Clone)]
pub struct SectionMapping {
    data: Blob,
    len: u64,
}

impl SectionMapping {
    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, id: u64) -> Result<(SectionKind, u64)> {
        if id == 0 || id > self.len {
            return Err(Error::MappingIncomplete(format!("no mapping for id {id} of {}", self.len)));
        }
        let at = (id as usize - 1) * SECTION_RECORD;
        let rec = &self.data.as_slice()[at..at + SECTION_RECORD];
        let kind = SectionKind::from_tag(rec[0])
            .ok_or_else(|| Error::MappingIncomplete(format!("bad section tag {} for id {id}", rec[0])))?;
        Ok((kind, u64::from_le_bytes(rec[1..].try_into().expect("8 bytes"))))
    }
}

pub struct SubjectMapWriter(RecordFile);

impl SubjectMapWriter {
    pub fn create(path: PathBuf) -> Result<Self> {
        Ok(SubjectMapWriter(RecordFile::create(path)?))
    }

    pub fn push(&mut self, source: Option<u64>) -> Result<()> {
        self.0.out.write_all(&source.unwrap_or(0).to_le_bytes())?;
        self.0.records += 1;
        Ok(())
    }

    fn finish(self) -> Result<(Blob, u64)> {
        self.0.finish()
    }
}

/// Merged subject ID (shared then subject-only, consecutive) to the subject
/// ID of one source file.
#[derive(Debug, Clone)]
pub struct CatSubjectMapping {
    shared: Blob,
    shared_len: u64,
    subjects: Blob,
    subjects_len: u64,
}

impl CatSubjectMapping {
    pub fn from_writers(shared: SubjectMapWriter, subjects: SubjectMapWriter) -> Result<Self> {
        let (shared, shared_len) = shared.finish()?;
        let (subjects, subjects_len) = subjects.finish()?;
        Ok(CatSubjectMapping { shared, shared_len, subjects, subjects_len })
    }

    pub fn len(&self) -> u64 {
        self.shared_len + self.subjects_len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, merged: u64) -> Result<Option<u64>> {
        let (blob, i) = if merged >= 1 && merged <= self.shared_len {
            (&self.shared, merged - 1)
        } else if merged > self.shared_len && merged <= self.len() {
            (&self.subjects, merged - self.shared_len - 1)
        } else {
            return Err(Error::MappingIncomplete(format!("merged subject {merged} beyond {}", self.len())));
        };
        let v = blob.u64_at(i as usize);
        Ok((v != 0).then_some(v))
    }
}

pub(crate) fn mapping_path(dir: &Path, name: &str) -> PathBuf {
    dir.join(format!("{name}.map"))
}
