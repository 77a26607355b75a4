use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use hdtx::dictionary::DEFAULT_BLOCK_SIZE;
use hdtx::ntriples::{parse_term, write_triple};
use hdtx::synth::{generate, SynthConfig};
use hdtx::{build_from_ntriples, build_from_triples, hdt_cat, BuildConfig, CatConfig, Graph, HdtDocument, ParseMode, SectionKind, Term};

#[derive(Parser)]
#[command(name = "hdtx", version, about = "Build, query and merge compact RDF files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress an N-Triples file
    Rdf2hdt {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
        block_size: u32,
        /// Skip malformed lines instead of failing
        #[arg(long)]
        lax: bool,
    },
    /// Decompress to N-Triples
    Hdt2rdf { input: PathBuf, output: PathBuf },
    /// Merge two files into one
    Cat {
        a: PathBuf,
        b: PathBuf,
        output: PathBuf,
        #[arg(long, env = "HDTX_TMPDIR")]
        tmp_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_BLOCK_SIZE)]
        block_size: u32,
        /// Print counters and timings to stderr
        #[arg(long)]
        stats: bool,
    },
    /// Print the header and component sizes
    Info { input: PathBuf },
    /// Print triples matching a pattern; `?` is a wildcard
    Search { input: PathBuf, s: String, p: String, o: String },
    /// Check a merged file against a rebuild of its inputs
    Verify { a: PathBuf, b: PathBuf, merged: PathBuf },
    /// Write a seeded synthetic N-Triples file
    #[command(hide = true)]
    Gen {
        output: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        triples: usize,
        #[arg(long, default_value_t = 0.0)]
        overlap: f64,
        #[arg(long, default_value_t = 0)]
        graph: u32,
    },
}

/// Exit status 2: the check ran and found a difference.
struct Mismatch(String);

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(Mismatch(msg))) => {
            eprintln!("mismatch: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn open(path: &Path) -> Result<HdtDocument> {
    HdtDocument::open(path).with_context(|| format!("reading {}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn run(command: Command) -> Result<Option<Mismatch>> {
    match command {
        Command::Rdf2hdt { input, output, block_size, lax } => {
            let source = BufReader::new(File::open(&input).with_context(|| format!("opening {}", input.display()))?);
            let parse_mode = if lax { ParseMode::Lax } else { ParseMode::Strict };
            let config = BuildConfig { block_size, parse_mode, ..BuildConfig::default() };
            let doc = build_from_ntriples(source, &config).with_context(|| format!("building from {}", input.display()))?;
            let mut out = create(&output)?;
            hdtx::write_document(&doc, &mut out)?;
            out.flush()?;
        }
        Command::Hdt2rdf { input, output } => {
            let doc = open(&input)?;
            let mut out = create(&output)?;
            for t in doc.term_triples() {
                write_triple(&mut out, &t?)?;
            }
            out.flush()?;
        }
        Command::Cat { a, b, output, tmp_dir, block_size, stats } => {
            let config = CatConfig { tmp_dir, block_size, ..CatConfig::default() };
            let s = hdt_cat(&a, &b, &output, &config).context("cat failed")?;
            if stats {
                let c = s.counts;
                eprintln!("triples            {}", c.triples);
                eprintln!("subjects           {}", c.subjects);
                eprintln!("predicates         {}", c.predicates);
                eprintln!("objects            {}", c.objects);
                eprintln!("shared             {}", c.shared);
                for ((x, y), n) in &s.common {
                    eprintln!("common {x}1/{y}2: {n}");
                }
                for (name, m) in &s.merges {
                    eprintln!("merge {name}: n={} m={} common={} out={} comparisons={}", m.n_a, m.n_b, m.n_common, m.n_out, m.comparisons);
                }
                eprintln!("peak sublist       {}", s.peak_sublist);
                eprintln!("peak resident      {}", s.peak_resident);
                eprintln!("bytes written      {}", s.bytes_written);
                eprintln!("wall time          {:.3} s", s.elapsed.as_secs_f64());
                if let Some(kb) = peak_rss_kb() {
                    eprintln!("peak rss           {kb} kB");
                }
            }
        }
        Command::Info { input } => {
            let doc = open(&input)?;
            let out = io::stdout();
            let mut out = out.lock();
            for (k, v) in doc.header.entries() {
                writeln!(out, "{k}={v}")?;
            }
            for kind in SectionKind::ALL {
                let sec = doc.dictionary.section(kind);
                writeln!(out, "section {kind}: {} entries, {} blocks, {} payload bytes", sec.len(), sec.block_count(), sec.payload().len())?;
            }
            let t = &doc.triples;
            writeln!(
                out,
                "triples: {} in {} subjects, seq_p width {}, seq_o width {}",
                t.len(),
                t.subject_count(),
                t.seq_p().width(),
                t.seq_o().width()
            )?;
            writeln!(out, "file size: {} bytes", std::fs::metadata(&input)?.len())?;
        }
        Command::Search { input, s, p, o } => {
            let doc = open(&input)?;
            let term = |text: &str| -> Result<Option<Term>> {
                if text == "?" {
                    Ok(None)
                } else {
                    Ok(Some(parse_term(text).with_context(|| format!("bad term {text}"))?))
                }
            };
            let (s, p, o) = (term(&s)?, term(&p)?, term(&o)?);
            let mut out = BufWriter::new(io::stdout().lock());
            for t in doc.search_terms(s.as_ref(), p.as_ref(), o.as_ref())? {
                write_triple(&mut out, &t?)?;
            }
            out.flush()?;
        }
        Command::Verify { a, b, merged } => {
            let (da, db, dm) = (open(&a)?, open(&b)?, open(&merged)?);
            let mut all = Vec::new();
            for t in da.term_triples().chain(db.term_triples()) {
                all.push(t?);
            }
            let rebuilt = build_from_triples(all, dm.dictionary.shared.block_size())?;
            let (want, got): (Graph, Graph) = (rebuilt.graph()?, dm.graph()?);
            if let Some(t) = want.first_difference(&got) {
                let side = if want.contains(t) { "missing from" } else { "unexpected in" };
                return Ok(Some(Mismatch(format!("{t} {side} {}", merged.display()))));
            }
            if rebuilt.to_bytes() != std::fs::read(&merged)? {
                return Ok(Some(Mismatch("same triples but different bytes".into())));
            }
            eprintln!("ok: {} triples", got.len());
        }
        Command::Gen { output, seed, triples, overlap, graph } => {
            anyhow::ensure!((0.0..=1.0).contains(&overlap), "overlap must be within [0, 1]");
            let mut out = create(&output)?;
            for t in generate(&SynthConfig { seed, triples, overlap, graph }) {
                write_triple(&mut out, &t)?;
            }
            out.flush()?;
        }
    }
    Ok(None)
}

fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}
