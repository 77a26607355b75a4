//! Linear merge of two strictly increasing streams.

use std::cell::Cell;
use std::cmp::Ordering;
use std::iter::Fuse;
use std::rc::Rc;

use crate::dictionary::Section;
use crate::error::{Error, Result};
use crate::meter::{Meter, MeterGuard};
use crate::term::Term;

/// Byte key that merge order is defined on.
pub trait MergeKey {
    fn merge_key(&self) -> &[u8];
}

impl MergeKey for Term {
    fn merge_key(&self) -> &[u8] {
        self.as_bytes()
    }
}

impl MergeKey for Vec<u8> {
    fn merge_key(&self) -> &[u8] {
        self
    }
}

impl MergeKey for String {
    fn merge_key(&self) -> &[u8] {
        self.as_bytes()
    }
}

impl<T: MergeKey> MergeKey for (u64, T) {
    fn merge_key(&self) -> &[u8] {
        self.1.merge_key()
    }
}

/// One output element and which inputs it came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Merged<A, B> {
    Left(A),
    Right(B),
    Both(A, B),
}

impl<A: MergeKey, B: MergeKey> Merged<A, B> {
    pub fn key(&self) -> &[u8] {
        match self {
            Merged::Left(a) | Merged::Both(a, _) => a.merge_key(),
            Merged::Right(b) => b.merge_key(),
        }
    }

    pub fn left(&self) -> Option<&A> {
        match self {
            Merged::Left(a) | Merged::Both(a, _) => Some(a),
            Merged::Right(_) => None,
        }
    }

    pub fn right(&self) -> Option<&B> {
        match self {
            Merged::Right(b) | Merged::Both(_, b) => Some(b),
            Merged::Left(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MergeCounts {
    pub n_a: u64,
    pub n_b: u64,
    pub n_common: u64,
    pub n_out: u64,
    /// Key comparisons between the two heads.
    pub comparisons: u64,
}

impl MergeCounts {
    /// The linear bound: one comparison per emitted element at most.
    pub fn within_linear_bound(&self) -> bool {
        self.comparisons <= self.n_a + self.n_b
    }
}

/// Live view of a merge's counters, readable after the merge is consumed.
#[derive(Debug, Clone, Default)]
pub struct MergeProbe(Rc<Cell<MergeCounts>>);

impl MergeProbe {
    pub fn get(&self) -> MergeCounts {
        self.0.get()
    }
}

/// Iterator form of the merge. Emits each distinct key once, in order,
/// and fails with `NotSorted` if either input is not strictly increasing.
pub struct SortedMerge<A: Iterator, B: Iterator, TA, TB> {
    a: Fuse<A>,
    b: Fuse<B>,
    head_a: Option<TA>,
    head_b: Option<TB>,
    last: Option<(Vec<u8>, MeterGuard)>,
    meter: Option<Meter>,
    probe: MergeProbe,
    failed: bool,
}

impl<A, B, TA, TB> SortedMerge<A, B, TA, TB>
where
    A: Iterator<Item = Result<TA>>,
    B: Iterator<Item = Result<TB>>,
    TA: MergeKey,
    TB: MergeKey,
{
    pub fn new(a: A, b: B) -> Self {
        SortedMerge {
            a: a.fuse(),
            b: b.fuse(),
            head_a: None,
            head_b: None,
            last: None,
            meter: None,
            probe: MergeProbe::default(),
            failed: false,
        }
    }

    /// Accounts the retained copy of the last key on `meter`.
    pub fn metered(mut self, meter: Option<&Meter>) -> Self {
        self.meter = meter.cloned();
        self
    }

    pub fn probe(&self) -> MergeProbe {
        self.probe.clone()
    }

    fn step(&mut self) -> Result<Option<Merged<TA, TB>>> {
        if self.head_a.is_none() {
            self.head_a = self.a.next().transpose()?;
        }
        if self.head_b.is_none() {
            self.head_b = self.b.next().transpose()?;
        }
        let mut c = self.probe.get();
        let out = match (self.head_a.take(), self.head_b.take()) {
            (None, None) => return Ok(None),
            (Some(x), None) => {
                c.n_a += 1;
                Merged::Left(x)
            }
            (None, Some(y)) => {
                c.n_b += 1;
                Merged::Right(y)
            }
            (Some(x), Some(y)) => {
                c.comparisons += 1;
                match x.merge_key().cmp(y.merge_key()) {
                    Ordering::Less => {
                        self.head_b = Some(y);
                        c.n_a += 1;
                        Merged::Left(x)
                    }
                    Ordering::Greater => {
                        self.head_a = Some(x);
                        c.n_b += 1;
                        Merged::Right(y)
                    }
                    Ordering::Equal => {
                        c.n_a += 1;
                        c.n_b += 1;
                        c.n_common += 1;
                        Merged::Both(x, y)
                    }
                }
            }
        };
        c.n_out += 1;
        self.probe.0.set(c);

        // the output is strictly increasing iff both inputs are
        let key = out.key();
        match &mut self.last {
            Some((last, _)) if key <= last.as_slice() => {
                return Err(Error::NotSorted(format!(
                    "{:?} after {:?}",
                    String::from_utf8_lossy(key),
                    String::from_utf8_lossy(last)
                )));
            }
            Some((last, _)) => {
                last.clear();
                last.extend_from_slice(key);
            }
            None => self.last = Some((key.to_vec(), MeterGuard::new(self.meter.as_ref(), 1))),
        }
        Ok(Some(out))
    }
}

impl<A, B, TA, TB> Iterator for SortedMerge<A, B, TA, TB>
where
    A: Iterator<Item = Result<TA>>,
    B: Iterator<Item = Result<TB>>,
    TA: MergeKey,
    TB: MergeKey,
{
    type Item = Result<Merged<TA, TB>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        match self.step() {
            Ok(v) => v.map(Ok),
            Err(e) => {
                self.failed = true;
                Some(Err(e))
            }
        }
    }
}

/// Push-style merge: calls `emit` once per distinct key, in order.
pub fn merge_sorted_streams<A, B, TA, TB, F>(a: A, b: B, mut emit: F) -> Result<MergeCounts>
where
    A: IntoIterator<Item = Result<TA>>,
    B: IntoIterator<Item = Result<TB>>,
    TA: MergeKey,
    TB: MergeKey,
    F: FnMut(Merged<TA, TB>) -> Result<()>,
{
    let merge = SortedMerge::new(a.into_iter(), b.into_iter());
    let probe = merge.probe();
    for item in merge {
        emit(item?)?;
    }
    Ok(probe.get())
}

/// Terms present in both sections, with their local IDs in each.
pub fn compute_common_entries(x: &Section, y: &Section) -> Result<Vec<(Term, u64, u64)>> {
    let mut common = Vec::new();
    merge_sorted_streams(x.iter_bytes(), y.iter_bytes(), |m| {
        if let Merged::Both((ix, bytes), (iy, _)) = m {
            common.push((Term::from_canonical(bytes)?, ix, iy));
        }
        Ok(())
    })?;
    Ok(common)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn ok<T>(v: Vec<T>) -> impl Iterator<Item = Result<T>> {
        v.into_iter().map(Ok)
    }

    fn strings(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn predicate_union() {
        let mut out = Vec::new();
        let counts = merge_sorted_streams(ok(strings(&["<p1>", "<p2>"])), ok(strings(&["<p1>", "<p3>"])), |m| {
            out.push(String::from_utf8(m.key().to_vec()).unwrap());
            Ok(())
        })
        .unwrap();
        assert_eq!(out, ["<p1>", "<p2>", "<p3>"]);
        assert_eq!(counts.n_common, 1);
        assert_eq!(counts.n_out, 3);
        assert!(counts.within_linear_bound());
    }

    #[test]
    fn one_side_empty_copies_rest() {
        let mut out = Vec::new();
        let counts = merge_sorted_streams(ok(Vec::<String>::new()), ok(strings(&["x", "y"])), |m| {
            assert!(matches!(m, Merged::Right(_)));
            out.push(m.key().to_vec());
            Ok(())
        })
        .unwrap();
        assert_eq!(out, [b"x".to_vec(), b"y".to_vec()]);
        assert_eq!(counts.comparisons, 0);
    }

    #[test]
    fn unsorted_input_rejected() {
        for (a, b) in [(vec!["b", "a"], vec![]), (vec!["a"], vec!["c", "b"]), (vec!["a", "a"], vec!["a"]), (vec!["b", "a"], vec!["a"])] {
            let r = merge_sorted_streams(ok(strings(&a)), ok(strings(&b)), |_| Ok(()));
            assert!(matches!(r, Err(Error::NotSorted(_))), "{a:?} {b:?}");
        }
    }

    #[test]
    fn common_entries_of_sections() {
        let s1 = Section::build(&[Term::iri("s1")], 16).unwrap();
        let o2 = Section::build(&[Term::iri("s1")], 16).unwrap();
        assert_eq!(compute_common_entries(&s1, &o2).unwrap(), [(Term::iri("s1"), 1, 1)]);
        let so1 = Section::build(&[Term::iri("so1")], 16).unwrap();
        let empty = Section::empty(16);
        assert!(compute_common_entries(&so1, &empty).unwrap().is_empty());
    }

    proptest! {
        #[test]
        fn merge_equals_sorted_union(a in proptest::collection::btree_set("[a-d]{0,4}", 0..60),
                                     b in proptest::collection::btree_set("[a-d]{0,4}", 0..60)) {
            let mut out = Vec::new();
            let counts = merge_sorted_streams(ok(a.iter().cloned().collect()), ok(b.iter().cloned().collect()), |m| {
                out.push(String::from_utf8(m.key().to_vec()).unwrap());
                Ok(())
            }).unwrap();
            let oracle: Vec<String> = a.union(&b).cloned().collect();
            prop_assert_eq!(&out, &oracle);
            prop_assert!(counts.comparisons <= (a.len() + b.len()) as u64);
            prop_assert_eq!(counts.n_common as usize, a.intersection(&b).count());
        }

        #[test]
        fn common_entries_match_intersection(a in proptest::collection::btree_set("[a-c]{1,3}", 0..30),
                                             b in proptest::collection::btree_set("[a-c]{1,3}", 0..30)) {
            let ta: Vec<Term> = a.iter().map(|s| Term::iri(s)).collect();
            let tb: Vec<Term> = b.iter().map(|s| Term::iri(s)).collect();
            let sa = Section::build(&ta, 4).unwrap();
            let sb = Section::build(&tb, 3).unwrap();
            let got = compute_common_entries(&sa, &sb).unwrap();
            let brute: BTreeSet<&String> = a.iter().filter(|x| b.contains(*x)).collect();
            prop_assert_eq!(got.len(), brute.len());
            for (t, ia, ib) in got {
                prop_assert_eq!(&ta[ia as usize - 1], &t);
                prop_assert_eq!(&tb[ib as usize - 1], &t);
            }
        }
    }
}
