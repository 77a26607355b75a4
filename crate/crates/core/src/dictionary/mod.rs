//! The four-section dictionary: shared (SO), subjects (S), objects (O) and
//! predicates (P).
//!
//! Subject IDs run over SO then S, object IDs over SO then O; a term in SO
//! has the same subject and object ID.

mod classify;
mod section;

pub use classify::{classify_terms, classify_terms_spilling, Classified};
pub use section::{Section, SectionIter, SectionWriter, WrittenSection, DEFAULT_BLOCK_SIZE};

pub(crate) use section::block_len;

use std::fmt;

use crate::error::{Error, Result};
use crate::term::Term;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SectionKind {
    Shared,
    Subjects,
    Objects,
    Predicates,
}

impl SectionKind {
    pub const ALL: [SectionKind; 4] =
        [SectionKind::Shared, SectionKind::Subjects, SectionKind::Objects, SectionKind::Predicates];

    pub fn name(self) -> &'static str {
        match self {
            SectionKind::Shared => "shared",
            SectionKind::Subjects => "subjects",
            SectionKind::Objects => "objects",
            SectionKind::Predicates => "predicates",
        }
    }

    pub(crate) fn tag(self) -> u8 {
        match self {
            SectionKind::Shared => 1,
            SectionKind::Subjects => 2,
            SectionKind::Objects => 3,
            SectionKind::Predicates => 4,
        }
    }

    pub(crate) fn from_tag(tag: u8) -> Option<SectionKind> {
        Some(match tag {
            1 => SectionKind::Shared,
            2 => SectionKind::Subjects,
            3 => SectionKind::Objects,
            4 => SectionKind::Predicates,
            _ => return None,
        })
    }
}

impl fmt::Display for SectionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SectionKind::Shared => "SO",
            SectionKind::Subjects => "S",
            SectionKind::Objects => "O",
            SectionKind::Predicates => "P",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Subject,
    Predicate,
    Object,
}

#[derive(Debug, Clone)]
pub struct Dictionary {
    pub shared: Section,
    pub subjects: Section,
    pub objects: Section,
    pub predicates: Section,
}

impl Dictionary {
    pub fn build(classified: &Classified, block_size: u32) -> Result<Dictionary> {
        Ok(Dictionary {
            shared: Section::build(&classified.shared, block_size)?,
            subjects: Section::build(&classified.subjects, block_size)?,
            objects: Section::build(&classified.objects, block_size)?,
            predicates: Section::build(&classified.predicates, block_size)?,
        })
    }

    pub fn empty(block_size: u32) -> Dictionary {
        Dictionary {
            shared: Section::empty(block_size),
            subjects: Section::empty(block_size),
            objects: Section::empty(block_size),
            predicates: Section::empty(block_size),
        }
    }

    pub fn section(&self, kind: SectionKind) -> &Section {
        match kind {
            SectionKind::Shared => &self.shared,
            SectionKind::Subjects => &self.subjects,
            SectionKind::Objects => &self.objects,
            SectionKind::Predicates => &self.predicates,
        }
    }

    pub fn subject_count(&self) -> u64 {
        self.shared.len() + self.subjects.len()
    }

    pub fn object_count(&self) -> u64 {
        self.shared.len() + self.objects.len()
    }

    pub fn predicate_count(&self) -> u64 {
        self.predicates.len()
    }

    fn role_sections(&self, role: Role) -> (Option<&Section>, &Section) {
        match role {
            Role::Subject => (Some(&self.shared), &self.subjects),
            Role::Object => (Some(&self.shared), &self.objects),
            Role::Predicate => (None, &self.predicates),
        }
    }

    /// Global ID of `term` in `role`, if present.
    pub fn global_id(&self, role: Role, term: &Term) -> Result<Option<u64>> {
        let (shared, own) = self.role_sections(role);
        let mut base = 0;
        if let Some(shared) = shared {
            if let Some(id) = shared.locate(term)? {
                return Ok(Some(id));
            }
            base = shared.len();
        }
        Ok(own.locate(term)?.map(|id| id + base))
    }

    pub fn id_to_term(&self, role: Role, gid: u64) -> Result<Term> {
        let (shared, own) = self.role_sections(role);
        let shared_len = shared.map_or(0, Section::len);
        let max = shared_len + own.len();
        if gid == 0 || gid > max {
            return Err(Error::IdOutOfRange { id: gid, max });
        }
        match shared {
            Some(s) if gid <= shared_len => s.extract(gid),
            _ => own.extract(gid - shared_len),
        }
    }
}
