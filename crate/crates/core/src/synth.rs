//! Seeded synthetic graphs for tests and benchmarks.
//!
//! Terms come from a pool shared by every graph generated with the same
//! seed and a pool private to each graph; `overlap` is the probability of
//! drawing from the shared one. Subjects and entity objects use the same
//! IRIs, so a term that is subject-only in one graph is often an object in
//! another.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::term::{Term, TermTriple};

const CLASSES: [&str; 6] = ["University", "Department", "Professor", "Student", "Course", "Publication"];
const PREDICATES: [&str; 10] = [
    "memberOf",
    "worksFor",
    "advisor",
    "takesCourse",
    "teacherOf",
    "publicationAuthor",
    "subOrganizationOf",
    "name",
    "emailAddress",
    "type",
];

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub triples: usize,
    /// Probability in `[0, 1]` that a term is drawn from the shared pool.
    pub overlap: f64,
    /// Distinguishes the private pools of graphs generated from one seed.
    pub graph: u32,
}

impl SynthConfig {
    pub fn new(seed: u64, triples: usize) -> Self {
        SynthConfig { seed, triples, overlap: 0.0, graph: 0 }
    }
}

fn entity(pool: &str, n: u64) -> Term {
    Term::iri(&format!("http://ex.org/{pool}/{}{n}", CLASSES[n as usize % CLASSES.len()]))
}

fn literal(rng: &mut ChaCha8Rng, pool: &str, n: u64) -> Term {
    match rng.random_range(0..10) {
        0 => Term::lang_literal(&format!("Name {n} of {pool}"), "en"),
        1 => Term::typed_literal(&n.to_string(), &format!("http://ex.org/{pool}#count")),
        2 => Term::literal(&format!("line\n\"{n}\"\t{pool}")),
        _ => Term::literal(&format!("{pool}{n}@ex.org")),
    }
}

/// Generates `config.triples` triples; duplicates are possible.
pub fn generate(config: &SynthConfig) -> Vec<TermTriple> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ (u64::from(config.graph) << 32).wrapping_add(0x9e37_79b9));
    let private = format!("g{}", config.graph);
    let entities = (config.triples as u64 / 3).max(4);
    let mut out = Vec::with_capacity(config.triples);
    for _ in 0..config.triples {
        let pool = |rng: &mut ChaCha8Rng| if rng.random_bool(config.overlap) { "shared" } else { private.as_str() };
        let s = entity(pool(&mut rng), rng.random_range(0..entities));
        let pp = pool(&mut rng);
        let p = Term::iri(&format!("http://ex.org/{pp}#{}", PREDICATES[rng.random_range(0..PREDICATES.len())]));
        let op = pool(&mut rng);
        let o = match rng.random_range(0..10) {
            0..=5 => entity(op, rng.random_range(0..entities)),
            6..=8 => {
                let n = rng.random_range(0..entities);
                literal(&mut rng, op, n)
            }
            _ => Term::blank(&format!("{op}b{}", rng.random_range(0..entities / 4 + 1))),
        };
        out.push(TermTriple { s, p, o });
    }
    out
}

/// Two graphs from the same seed with the given overlap.
pub fn generate_pair(seed: u64, a: usize, b: usize, overlap: f64) -> (Vec<TermTriple>, Vec<TermTriple>) {
    let config = |graph, triples| SynthConfig { seed, triples, overlap, graph };
    (generate(&config(1, a)), generate(&config(2, b)))
}

/// Shuffles `triples` deterministically.
pub fn shuffle(triples: &mut [TermTriple], seed: u64) {
    triples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
}
