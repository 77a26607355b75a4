//! Shared read-only byte storage, either owned or memory-mapped.

use std::fmt;
use std::fs::File;
use std::ops::Range;
use std::path::Path;
use std::sync::Arc;

use memmap2::Mmap;

use crate::error::{Error, Result};

/// A cheaply clonable view into immutable bytes.
#[derive(Clone)]
pub struct Blob {
    owner: Arc<dyn AsRef<[u8]> + Send + Sync>,
    range: Range<usize>,
}

impl Blob {
    pub fn from_vec(bytes: Vec<u8>) -> Blob {
        let len = bytes.len();
        Blob { owner: Arc::new(bytes), range: 0..len }
    }

    /// Maps a file read-only. The file must not be modified while mapped.
    pub fn map_file(path: &Path) -> Result<Blob> {
        let file = File::open(path)?;
        let len = file.metadata()?.len();
        if len == 0 {
            return Ok(Blob::from_vec(Vec::new()));
        }
        // SAFETY: files handed to us are treated as immutable for the lifetime of the map
        let map = unsafe { Mmap::map(&file)? };
        let len = map.len();
        Ok(Blob { owner: Arc::new(map), range: 0..len })
    }

    pub fn len(&self) -> usize {
        self.range.len()
    }

    pub fn is_empty(&self) -> bool {
        self.range.is_empty()
    }

    pub fn as_slice(&self) -> &[u8] {
        &(*self.owner).as_ref()[self.range.clone()]
    }

    /// Sub-view relative to this blob.
    pub fn slice(&self, range: Range<usize>) -> Result<Blob> {
        if range.start > range.end || range.end > self.len() {
            return Err(Error::Corrupt(format!("range {range:?} outside blob of {} bytes", self.len())));
        }
        Ok(Blob { owner: Arc::clone(&self.owner), range: self.range.start + range.start..self.range.start + range.end })
    }

    /// Little-endian u64 at word index `i`.
    pub(crate) fn u64_at(&self, i: usize) -> u64 {
        let b = &self.as_slice()[i * 8..i * 8 + 8];
        u64::from_le_bytes(b.try_into().expect("8 bytes"))
    }
}

impl fmt::Debug for Blob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Blob({} bytes)", self.len())
    }
}

impl AsRef<[u8]> for Blob {
    fn as_ref(&self) -> &[u8] {
        self.as_slice()
    }
}
