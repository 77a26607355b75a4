//! RDF terms and triples.
//!
//! A [`Term`] is stored in its canonical N-Triples serialization. Equality,
//! hashing and ordering all work on those bytes, so the ordering used by the
//! dictionary is plain bytewise comparison of the serialized form: literals
//! (`"`) sort before IRIs (`<`), which sort before blank nodes (`_`).

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;
use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TermKind {
    Iri,
    BlankNode,
    Literal,
}

#[derive(Clone)]
pub struct Term {
    kind: TermKind,
    lexical: String,
}

impl Term {
    /// Builds an IRI term from the text between the angle brackets.
    ///
    /// The text is taken as already canonical; use [`crate::ntriples::parse_term`]
    /// for untrusted input.
    pub fn iri(iri: &str) -> Term {
        Term { kind: TermKind::Iri, lexical: format!("<{iri}>") }
    }

    pub fn blank(label: &str) -> Term {
        Term { kind: TermKind::BlankNode, lexical: format!("_:{label}") }
    }

    /// A plain literal; `value` is escaped canonically.
    pub fn literal(value: &str) -> Term {
        let mut lexical = String::with_capacity(value.len() + 2);
        lexical.push('"');
        crate::ntriples::escape_literal(value, &mut lexical);
        lexical.push('"');
        Term { kind: TermKind::Literal, lexical }
    }

    pub fn lang_literal(value: &str, lang: &str) -> Term {
        let mut t = Term::literal(value);
        t.lexical.push('@');
        t.lexical.push_str(lang);
        t
    }

    pub fn typed_literal(value: &str, datatype: &str) -> Term {
        let mut t = Term::literal(value);
        t.lexical.push_str("^^<");
        t.lexical.push_str(datatype);
        t.lexical.push('>');
        t
    }

    /// Rebuilds a term from canonical bytes read back from a dictionary.
    pub fn from_canonical(bytes: Vec<u8>) -> Result<Term> {
        let lexical = String::from_utf8(bytes)
            .map_err(|_| Error::Corrupt("dictionary entry is not UTF-8".into()))?;
        let kind = match lexical.as_bytes().first() {
            Some(b'<') => TermKind::Iri,
            Some(b'_') => TermKind::BlankNode,
            Some(b'"') => TermKind::Literal,
            _ => return Err(Error::Corrupt(format!("not a canonical term: {lexical:?}"))),
        };
        Ok(Term { kind, lexical })
    }

    pub(crate) fn from_parts(kind: TermKind, lexical: String) -> Term {
        Term { kind, lexical }
    }

    pub fn kind(&self) -> TermKind {
        self.kind
    }

    pub fn as_str(&self) -> &str {
        &self.lexical
    }

    pub fn as_bytes(&self) -> &[u8] {
        self.lexical.as_bytes()
    }

    pub fn into_string(self) -> String {
        self.lexical
    }

    pub fn is_subject_kind(&self) -> bool {
        matches!(self.kind, TermKind::Iri | TermKind::BlankNode)
    }
}

impl PartialEq for Term {
    fn eq(&self, other: &Self) -> bool {
        self.lexical == other.lexical
    }
}

impl Eq for Term {}

impl Hash for Term {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.lexical.hash(state);
    }
}

impl PartialOrd for Term {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Term {
    fn cmp(&self, other: &Self) -> Ordering {
        term_order(self, other)
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexical)
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.lexical)
    }
}

/// Bytewise comparison of canonical serializations.
pub fn term_order(a: &Term, b: &Term) -> Ordering {
    a.as_bytes().cmp(b.as_bytes())
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct TermTriple {
    pub s: Term,
    pub p: Term,
    pub o: Term,
}

impl TermTriple {
    /// Checks the positional kind constraints and builds the triple.
    pub fn new(s: Term, p: Term, o: Term) -> Result<TermTriple> {
        if !s.is_subject_kind() {
            return Err(Error::Corrupt(format!("literal {s} in subject position")));
        }
        if p.kind() != TermKind::Iri {
            return Err(Error::Corrupt(format!("{p} in predicate position")));
        }
        Ok(TermTriple { s, p, o })
    }
}

impl fmt::Display for TermTriple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} .", self.s, self.p, self.o)
    }
}

/// A set of triples.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Graph {
    triples: BTreeSet<TermTriple>,
}

impl Graph {
    pub fn new() -> Graph {
        Graph::default()
    }

    /// Returns false if the triple was already present.
    pub fn insert(&mut self, t: TermTriple) -> bool {
        self.triples.insert(t)
    }

    pub fn contains(&self, t: &TermTriple) -> bool {
        self.triples.contains(t)
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TermTriple> {
        self.triples.iter()
    }

    pub fn union(&self, other: &Graph) -> Graph {
        Graph { triples: self.triples.union(&other.triples).cloned().collect() }
    }

    /// First triple (in term order) present in exactly one of the two graphs.
    pub fn first_difference<'a>(&'a self, other: &'a Graph) -> Option<&'a TermTriple> {
        self.triples.symmetric_difference(&other.triples).next()
    }
}

impl FromIterator<TermTriple> for Graph {
    fn from_iter<I: IntoIterator<Item = TermTriple>>(iter: I) -> Self {
        Graph { triples: iter.into_iter().collect() }
    }
}

impl IntoIterator for Graph {
    type Item = TermTriple;
    type IntoIter = std::collections::btree_set::IntoIter<TermTriple>;

    fn into_iter(self) -> Self::IntoIter {
        self.triples.into_iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn order_examples() {
        assert_eq!(term_order(&Term::iri("o2"), &Term::iri("so1")), Ordering::Less);
        assert_eq!(term_order(&Term::iri("s1"), &Term::iri("s1")), Ordering::Equal);
        // '1' (0x31) sorts before 'o' (0x6F)
        assert_eq!(term_order(&Term::iri("s1"), &Term::iri("so1")), Ordering::Less);
    }

    #[test]
    fn kinds_sort_literal_iri_blank() {
        let lit = Term::literal("zzz");
        let iri = Term::iri("a");
        let blank = Term::blank("a");
        assert!(lit < iri && iri < blank);
    }

    #[test]
    fn canonical_round_trip() {
        let t = Term::lang_literal("x\ny", "en");
        let back = Term::from_canonical(t.as_bytes().to_vec()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.kind(), TermKind::Literal);
        assert!(Term::from_canonical(b"abc".to_vec()).is_err());
    }

    #[test]
    fn triple_kind_checks() {
        assert!(TermTriple::new(Term::literal("x"), Term::iri("p"), Term::iri("o")).is_err());
        assert!(TermTriple::new(Term::iri("s"), Term::blank("p"), Term::iri("o")).is_err());
        assert!(TermTriple::new(Term::blank("s"), Term::iri("p"), Term::literal("o")).is_ok());
    }

    fn arb_term() -> impl Strategy<Value = Term> {
        prop_oneof![
            "[a-z0-9:/#]{0,6}".prop_map(|s| Term::iri(&s)),
            "[a-z][a-z0-9]{0,4}".prop_map(|s| Term::blank(&s)),
            any::<String>().prop_map(|s| Term::literal(&s)),
        ]
    }

    proptest! {
        #[test]
        fn order_is_total(a in arb_term(), b in arb_term(), c in arb_term()) {
            let ab = term_order(&a, &b);
            prop_assert_eq!(ab, term_order(&b, &a).reverse());
            prop_assert_eq!(ab == Ordering::Equal, a == b);
            if ab != Ordering::Greater && term_order(&b, &c) != Ordering::Greater {
                prop_assert_ne!(term_order(&a, &c), Ordering::Greater);
            }
        }
    }
}
