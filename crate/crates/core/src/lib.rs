//! Compact, queryable RDF files and a merge that joins two of them without
//! decompressing either.
//!
//! A document has a header of counts, a dictionary of four front-coded
//! sections (terms that are both subject and object, subject-only,
//! object-only, predicates) and the triples as bitmap-encoded ID lists.
//!
//! ```
//! use hdtx::{build_from_ntriples, cat_documents, BuildConfig, CatConfig, HdtDocument};
//!
//! let a = build_from_ntriples("<a> <p> <b> .\n".as_bytes(), &BuildConfig::default()).unwrap();
//! let b = build_from_ntriples("<b> <p> <c> .\n".as_bytes(), &BuildConfig::default()).unwrap();
//! let mut out = Vec::new();
//! cat_documents(&a, &b, &mut out, &CatConfig::default()).unwrap();
//! let merged = HdtDocument::from_bytes(out).unwrap();
//! assert_eq!(merged.triples.len(), 2);
//! assert_eq!(merged.dictionary.shared.len(), 1);
//! ```

pub mod bits;
pub mod blob;
pub mod builder;
pub mod cat;
pub mod container;
pub mod dictionary;
pub mod error;
pub mod meter;
pub mod ntriples;
pub mod synth;
pub mod term;
pub mod triples;

pub use builder::{build_from_ntriples, build_from_triples, BuildConfig};
pub use cat::{cat_documents, hdt_cat, merge_sorted_streams, CatConfig, CatStats, MergeCounts};
pub use container::{read_document, write_document, Counts, HdtDocument, Header};
pub use dictionary::{Dictionary, Role, Section, SectionKind};
pub use error::{Error, ParseError, Result};
pub use meter::Meter;
pub use ntriples::{parse_ntriples_line, parse_ntriples_stream, serialize_triple, ParseMode};
pub use term::{Graph, Term, TermKind, TermTriple};
pub use triples::{BitmapTriples, IdTriple};
