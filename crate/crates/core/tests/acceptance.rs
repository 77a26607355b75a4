//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hdtx::cat::{cat_documents, CatConfig, CatStats};
use hdtx::ntriples::write_triple;
use hdtx::synth::{generate, generate_pair, shuffle, SynthConfig};
use hdtx::{build_from_ntriples, BuildConfig, Graph, HdtDocument, Section, Term, TermTriple};

const BLOCK_SIZE: u32 = 16;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn to_nt(triples: &[TermTriple]) -> String {
    let mut out = Vec::new();
    for t in triples {
        write_triple(&mut out, t).unwrap();
    }
    String::from_utf8(out).unwrap()
}

fn build(text: &str) -> HdtDocument {
    build_from_ntriples(text.as_bytes(), &BuildConfig { block_size: BLOCK_SIZE, ..BuildConfig::default() }).unwrap()
}

fn decompress(doc: &HdtDocument) -> String {
    let mut out = Vec::new();
    for t in doc.term_triples() {
        write_triple(&mut out, &t.unwrap()).unwrap();
    }
    String::from_utf8(out).unwrap()
}

fn cat(a: &HdtDocument, b: &HdtDocument) -> (Vec<u8>, CatStats) {
    let mut out = Vec::new();
    let config = CatConfig { block_size: BLOCK_SIZE, ..CatConfig::default() };
    let stats = cat_documents(a, b, &mut out, &config).unwrap();
    (out, stats)
}

/// The baseline the merge must agree with: decompress both, concatenate, rebuild.
fn rebuild_oracle(a: &HdtDocument, b: &HdtDocument) -> Vec<u8> {
    build(&format!("{}{}", decompress(a), decompress(b))).to_bytes()
}

fn names(sec: &Section) -> Vec<String> {
    sec.iter().map(|r| r.unwrap().1.into_string()).collect()
}

/// Brute-force section assignment straight from the definition.
fn classify_oracle(text: &str) -> [Vec<String>; 4] {
    let mut subj = BTreeSet::new();
    let mut obj = BTreeSet::new();
    let mut pred = BTreeSet::new();
    for line in text.lines() {
        let parts: Vec<&str> = line.split_whitespace().collect();
        subj.insert(parts[0].to_string());
        pred.insert(parts[1].to_string());
        obj.insert(parts[2].to_string());
    }
    [
        subj.intersection(&obj).cloned().collect(),
        subj.difference(&obj).cloned().collect(),
        obj.difference(&subj).cloned().collect(),
        pred.into_iter().collect(),
    ]
}

fn sections(doc: &HdtDocument) -> [Vec<String>; 4] {
    let d = &doc.dictionary;
    [names(&d.shared), names(&d.subjects), names(&d.objects), names(&d.predicates)]
}

fn ids(doc: &HdtDocument) -> Vec<(u64, u64, u64)> {
    doc.triples.iter().map(|t| (t.s, t.p, t.o)).collect()
}

const RDF1: &str = "<so1> <p1> <o1> .\n<so1> <p1> <o2> .\n<s1>  <p2> <so1> .\n";
const RDF2: &str = "<so1> <p3> <o2> .\n<o2> <p1> <s1> .\n";

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn criterion_1() -> Outcome {
    let (h1, h2) = (build(RDF1), build(RDF2));

    // first input: dictionary tables and plain triples as printed
    ensure(
        sections(&h1) == [strs(&["<so1>"]), strs(&["<s1>"]), strs(&["<o1>", "<o2>"]), strs(&["<p1>", "<p2>"])],
        || format!("RDF1 sections {:?}", sections(&h1)),
    )?;
    let gid = |d: &HdtDocument, role, t| d.dictionary.global_id(role, &Term::iri(t)).unwrap();
    ensure(gid(&h1, hdtx::Role::Subject, "s1") == Some(2), || "RDF1 id of s1".into())?;
    ensure(gid(&h1, hdtx::Role::Object, "o1") == Some(2) && gid(&h1, hdtx::Role::Object, "o2") == Some(3), || {
        "RDF1 object ids".into()
    })?;
    ensure(ids(&h1) == [(1, 1, 2), (1, 1, 3), (2, 2, 1)], || format!("RDF1 triples {:?}", ids(&h1)))?;

    // second input: the printed table puts so1 in SO although so1 is never
    // an object in RDF2; the section definition places it in S, which also
    // shifts s1 to object id 2
    ensure(sections(&h2) == classify_oracle(RDF2), || format!("RDF2 sections {:?}", sections(&h2)))?;
    ensure(
        sections(&h2) == [strs(&["<o2>"]), strs(&["<so1>"]), strs(&["<s1>"]), strs(&["<p1>", "<p3>"])],
        || "RDF2 sections".into(),
    )?;
    ensure(ids(&h2) == [(1, 1, 2), (2, 2, 1)], || format!("RDF2 triples {:?}", ids(&h2)))?;

    // merged: recomputed under bytewise order (the printed merge tables
    // list so1 before s1, which is not sorted)
    let (bytes, _) = cat(&h1, &h2);
    let merged = HdtDocument::from_bytes(bytes.clone()).unwrap();
    ensure(
        sections(&merged) == [strs(&["<o2>", "<s1>", "<so1>"]), vec![], strs(&["<o1>"]), strs(&["<p1>", "<p2>", "<p3>"])],
        || format!("merged sections {:?}", sections(&merged)),
    )?;
    ensure(sections(&merged) == classify_oracle(&format!("{RDF1}{RDF2}")), || "merged sections vs oracle".into())?;
    ensure(ids(&merged) == [(1, 1, 2), (2, 2, 3), (3, 1, 1), (3, 1, 4), (3, 3, 1)], || format!("merged triples {:?}", ids(&merged)))?;
    ensure(bytes == rebuild_oracle(&h1, &h2), || "merged bytes differ from rebuild".into())?;
    Ok("RDF1 tables exact; RDF2 follows the section definition (printed table lists so1 as shared); merged SO {o2,s1,so1}, O {o1}, P {p1,p2,p3}, 5 triples".into())
}

#[derive(Default)]
struct MergeLog {
    merges: u64,
    comparisons: u64,
    bound: u64,
    violations: Vec<String>,
}

impl MergeLog {
    fn record(&mut self, stats: &CatStats) {
        for (name, m) in &stats.merges {
            self.merges += 1;
            self.comparisons += m.comparisons;
            self.bound += m.n_a + m.n_b;
            if !m.within_linear_bound() {
                self.violations.push(format!("{name}: {} comparisons for n+m={}", m.comparisons, m.n_a + m.n_b));
            }
        }
    }
}

fn criterion_2(log: &mut MergeLog) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let overlaps = [0.0, 0.5, 0.9];
    let mut total = 0u64;
    for case in 0..200 {
        let overlap = overlaps[case % 3];
        let (na, nb) = (rng.random_range(1..=10_000), rng.random_range(1..=10_000));
        let (ga, gb) = generate_pair(rng.random(), na, nb, overlap);
        let (a, b) = (build(&to_nt(&ga)), build(&to_nt(&gb)));
        let (bytes, stats) = cat(&a, &b);
        log.record(&stats);
        total += stats.counts.triples;
        ensure(bytes == rebuild_oracle(&a, &b), || format!("case {case} (overlap {overlap}, {na}+{nb} triples) differs from rebuild"))?;
    }
    Ok(format!("200 pairs byte-identical to rebuild, {total} merged triples"))
}

fn criterion_3(log: &mut MergeLog) -> Outcome {
    let mut triples = generate(&SynthConfig::new(3, 20_000));
    let whole = build(&to_nt(&triples));
    shuffle(&mut triples, 33);
    let (left, right) = triples.split_at(triples.len() / 2);
    let (a, b) = (build(&to_nt(left)), build(&to_nt(right)));
    let (bytes, stats) = cat(&a, &b);
    log.record(&stats);
    let common: u64 = stats.common.values().sum();
    ensure(bytes == whole.to_bytes(), || "cat of halves differs from direct build".into())?;
    Ok(format!("{} triples, {common} terms in both halves, byte-identical", whole.triples.len()))
}

fn criterion_4(log: &mut MergeLog, resident: &mut Vec<(usize, usize)>) -> Outcome {
    let triples = generate(&SynthConfig::new(4, 100_000));
    let t0 = Instant::now();
    let whole = build(&to_nt(&triples));
    let direct = t0.elapsed();

    let dir = tempfile::tempdir().unwrap();
    let config = CatConfig { tmp_dir: Some(dir.path().to_path_buf()), block_size: BLOCK_SIZE, ..CatConfig::default() };
    let t0 = Instant::now();
    let mut acc = dir.path().join("acc0.hdtx");
    std::fs::write(&acc, build(&to_nt(&triples[..10_000])).to_bytes()).unwrap();
    for i in 1..10 {
        let chunk = dir.path().join(format!("chunk{i}.hdtx"));
        std::fs::write(&chunk, build(&to_nt(&triples[i * 10_000..(i + 1) * 10_000])).to_bytes()).unwrap();
        let next = dir.path().join(format!("acc{i}.hdtx"));
        let stats = hdtx::hdt_cat(&acc, &chunk, &next, &config).unwrap();
        log.record(&stats);
        resident.push((stats.peak_resident, stats.peak_sublist));
        acc = next;
    }
    let chunked = t0.elapsed();
    ensure(std::fs::read(&acc).unwrap() == whole.to_bytes(), || "folded result differs from direct build".into())?;
    Ok(format!(
        "{} triples, folded {:.2}s (incl. chunk builds) vs direct {:.2}s, byte-identical",
        whole.triples.len(),
        chunked.as_secs_f64(),
        direct.as_secs_f64()
    ))
}

fn criterion_5(log: &MergeLog) -> Outcome {
    ensure(log.merges > 0, || "no merges recorded".into())?;
    ensure(log.violations.is_empty(), || log.violations.join("; "))?;
    Ok(format!("{} merges, {} comparisons against a bound of {}", log.merges, log.comparisons, log.bound))
}

fn criterion_6(resident: &[(usize, usize)]) -> Outcome {
    ensure(resident.len() == 9, || "criterion 4 did not record all merges".into())?;
    let limit = 4 * BLOCK_SIZE as usize;
    for (i, &(peak, sublist)) in resident.iter().enumerate() {
        ensure(peak <= limit + sublist, || format!("merge {}: {peak} resident > {limit} + {sublist}", i + 1))?;
    }
    let worst = resident.iter().map(|&(p, s)| p as i64 - s as i64).max().unwrap();
    Ok(format!("peak resident minus sublist at most {worst} (limit {limit}) over 9 merges"))
}

/// Random term with awkward characters.
fn random_term(rng: &mut ChaCha8Rng, object: bool) -> Term {
    const CHARS: &[char] = &['a', 'z', '0', ' ', '"', '\\', '\n', '\r', '\t', '\u{1}', '\u{7f}', 'é', '€', '𝄞', '>', '<', '{', '@', '^'];
    let text: String = (0..rng.random_range(0..8)).map(|_| CHARS[rng.random_range(0..CHARS.len())]).collect();
    let word: String = (0..rng.random_range(1..5)).map(|_| ['a', 'b', 'é', '𝄞', '%', '~'][rng.random_range(0..6)]).collect();
    match rng.random_range(0..if object { 6 } else { 2 }) {
        0 => Term::iri(&format!("http://ex.org/{word}")),
        1 => Term::blank(&format!("n{}", rng.random_range(0..20))),
        2 => Term::literal(&text),
        3 => Term::lang_literal(&text, ["en", "en-GB", "de"][rng.random_range(0..3)]),
        4 => Term::typed_literal(&text, "http://www.w3.org/2001/XMLSchema#string"),
        _ => Term::iri(&format!("urn:x:{word}")),
    }
}

fn random_graph(rng: &mut ChaCha8Rng) -> Vec<TermTriple> {
    (0..rng.random_range(0..200))
        .map(|_| {
            let p = Term::iri(&format!("http://ex.org/p{}", rng.random_range(0..5)));
            TermTriple::new(random_term(rng, false), p, random_term(rng, true)).unwrap()
        })
        .collect()
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for case in 0..100 {
        let triples = random_graph(&mut rng);
        let want: Graph = triples.iter().cloned().collect();
        let doc = build(&to_nt(&triples));
        let back = build_from_ntriples(decompress(&doc).as_bytes(), &BuildConfig::default()).unwrap();
        ensure(back.graph().unwrap() == want, || format!("round trip case {case} lost or changed triples"))?;
    }
    for case in 0..100 {
        let mut triples = random_graph(&mut rng);
        let reference = build(&to_nt(&triples)).to_bytes();
        shuffle(&mut triples, rng.random());
        ensure(build(&to_nt(&triples)).to_bytes() == reference, || format!("permutation case {case} changed the output"))?;
    }
    Ok("100 round trips equal as triple sets, 100 permutations byte-identical".into())
}

fn criterion_8() -> Outcome {
    let doc = build(&to_nt(&generate(&SynthConfig { overlap: 0.0, ..SynthConfig::new(8, 300) })));
    let valid = doc.to_bytes();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut positions: Vec<usize> = (0..valid.len()).collect();
    if positions.len() > 1024 {
        // keep the first and last bytes of every part in the sample
        let mut sample: BTreeSet<usize> = (0..64).chain(valid.len() - 64..valid.len()).collect();
        while sample.len() < 1024 {
            sample.insert(rng.random_range(0..valid.len()));
        }
        positions = sample.into_iter().collect();
    }
    let hook = panic::take_hook();
    panic::set_hook(Box::new(|_| {}));
    let mut kinds = BTreeSet::new();
    let mut failure = None;
    for &pos in &positions {
        let mut bytes = valid.clone();
        bytes[pos] ^= rng.random_range(1..=255u8);
        match panic::catch_unwind(AssertUnwindSafe(|| HdtDocument::from_bytes(bytes))) {
            Ok(Err(e)) => {
                kinds.insert(format!("{e:?}").split(['(', ' ', '{']).next().unwrap().to_string());
            }
            Ok(Ok(_)) => {
                failure = Some(format!("corruption at byte {pos} was accepted"));
                break;
            }
            Err(_) => {
                failure = Some(format!("corruption at byte {pos} panicked"));
                break;
            }
        }
    }
    panic::set_hook(hook);
    if let Some(f) = failure {
        return Err(f);
    }
    Ok(format!("{} of {} bytes corrupted, all rejected ({})", positions.len(), valid.len(), kinds.into_iter().collect::<Vec<_>>().join(", ")))
}

fn report(n: u32, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
        let msg = e.downcast_ref::<String>().cloned().or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panicked: {}", msg.unwrap_or_default()))
    });
    let elapsed = t0.elapsed();
    let (ok, detail) = match result {
        Ok(d) if elapsed <= limit => (true, d),
        Ok(d) => (false, format!("{d}; over the {}s budget", limit.as_secs())),
        Err(e) => (false, e),
    };
    println!("criterion {n}: {} ({:.2}s) {detail}", if ok { "PASS" } else { "FAIL" }, elapsed.as_secs_f64());
    ok
}

fn main() {
    let mut log = MergeLog::default();
    let mut resident = Vec::new();
    let results = [
        report(1, Duration::from_secs(1), criterion_1),
        report(2, Duration::from_secs(300), || criterion_2(&mut log)),
        report(3, Duration::from_secs(30), || criterion_3(&mut log)),
        report(4, Duration::from_secs(120), || criterion_4(&mut log, &mut resident)),
        report(5, Duration::MAX, || criterion_5(&log)),
        report(6, Duration::MAX, || criterion_6(&resident)),
        report(7, Duration::MAX, criterion_7),
        report(8, Duration::from_secs(60), criterion_8),
    ];
    let passed = results.iter().filter(|&&ok| ok).count();
    println!("acceptance: {passed}/{} criteria passed", results.len());
    if passed != results.len() {
        std::process::exit(1);
    }
}
