//! In-memory construction of a document from N-Triples.

use std::io::BufRead;

use crate::container::HdtDocument;
use crate::dictionary::{classify_terms, Dictionary, Role, DEFAULT_BLOCK_SIZE};
use crate::error::{Error, Result};
use crate::ntriples::{parse_ntriples_stream, ParseMode};
use crate::term::TermTriple;
use crate::triples::{encode_bitmap, IdTriple};

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub block_size: u32,
    pub parse_mode: ParseMode,
    /// Upper bound on triples held for sorting; `None` is unbounded.
    pub max_triples: Option<usize>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig { block_size: DEFAULT_BLOCK_SIZE, parse_mode: ParseMode::Strict, max_triples: None }
    }
}

pub fn build_from_ntriples<R: BufRead>(source: R, config: &BuildConfig) -> Result<HdtDocument> {
    let mut triples = Vec::new();
    for t in parse_ntriples_stream(source, config.parse_mode) {
        triples.push(t?);
        if config.max_triples.is_some_and(|max| triples.len() > max) {
            return Err(Error::CapacityExceeded(format!(
                "more than {} triples; build in chunks and merge them with cat",
                config.max_triples.unwrap_or_default()
            )));
        }
    }
    build_from_triples(triples, config.block_size)
}

/// Builds from already-parsed triples; duplicates are allowed and removed.
pub fn build_from_triples(triples: Vec<TermTriple>, block_size: u32) -> Result<HdtDocument> {
    let classified = classify_terms(triples.iter().cloned());
    let dict = Dictionary::build(&classified, block_size)?;
    drop(classified);

    let mut ids = Vec::with_capacity(triples.len());
    for t in &triples {
        let id = |role, term| dict.global_id(role, term)?.ok_or_else(|| Error::Corrupt(format!("{term} missing from dictionary")));
        ids.push(IdTriple::new(id(Role::Subject, &t.s)?, id(Role::Predicate, &t.p)?, id(Role::Object, &t.o)?));
    }
    drop(triples);
    ids.sort_unstable();
    ids.dedup();
    let bitmap = encode_bitmap(&ids)?;
    HdtDocument::new(dict, bitmap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::term::Term;

    const RDF1: &str = "<so1> <p1> <o1> .\n<so1> <p1> <o2> .\n<s1>  <p2> <so1> .\n";
    const RDF2: &str = "<so1> <p3> <o2> .\n<o2> <p1> <s1> .\n";

    fn plain(text: &str) -> Vec<IdTriple> {
        build_from_ntriples(text.as_bytes(), &BuildConfig::default()).unwrap().triples.iter().collect()
    }

    #[test]
    fn rdf1_plain_triples() {
        assert_eq!(plain(RDF1), [IdTriple::new(1, 1, 2), IdTriple::new(1, 1, 3), IdTriple::new(2, 2, 1)]);
    }

    #[test]
    fn rdf2_plain_triples_reordered() {
        // s1 is object 2 rather than 3 because so1 is subject-only
        assert_eq!(plain(RDF2), [IdTriple::new(1, 1, 2), IdTriple::new(2, 2, 1)]);
    }

    #[test]
    fn duplicate_line_counted_once() {
        let doc = build_from_ntriples("<a> <b> <c> .\n<a> <b> <c> .\n".as_bytes(), &BuildConfig::default()).unwrap();
        assert_eq!(doc.triples.len(), 1);
    }

    #[test]
    fn capacity_guard() {
        let config = BuildConfig { max_triples: Some(2), ..BuildConfig::default() };
        assert!(matches!(build_from_ntriples(RDF1.as_bytes(), &config), Err(Error::CapacityExceeded(_))));
    }

    #[test]
    fn parse_errors_propagate() {
        let err = build_from_ntriples("<a> <b> <c> .\n<a> <b>\n".as_bytes(), &BuildConfig::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedLine(ref e) if e.line == 2));
        let lax = BuildConfig { parse_mode: ParseMode::Lax, ..BuildConfig::default() };
        assert_eq!(build_from_ntriples("<a> <b> <c> .\n<a> <b>\n".as_bytes(), &lax).unwrap().triples.len(), 1);
    }

    #[test]
    fn decodes_back_to_terms() {
        let doc = build_from_ntriples(RDF1.as_bytes(), &BuildConfig::default()).unwrap();
        let g = doc.graph().unwrap();
        assert!(g.contains(&TermTriple { s: Term::iri("s1"), p: Term::iri("p2"), o: Term::iri("so1") }));
    }
}
