//! Line-oriented N-Triples reader and writer.
//!
//! Terms are normalized while parsing: `\uXXXX` escapes are decoded unless
//! the character must stay escaped, and literals are re-escaped with the
//! canonical set (`\"`, `\\`, `\n`, `\r`, `\t`, `\b`, `\f`, and `\u00XX`
//! for the remaining control characters).

use std::io::{BufRead, Write};

use crate::error::{Error, ParseError, Result};
use crate::term::{Term, TermKind, TermTriple};

/// Outcome of parsing one physical line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Line {
    Triple(TermTriple),
    /// Blank line or comment.
    Skip,
}

pub fn parse_ntriples_line(line: &[u8]) -> Result<Line, ParseError> {
    let text = match std::str::from_utf8(line) {
        Ok(t) => t,
        Err(e) => return Err(ParseError::new(e.valid_up_to() + 1, "invalid UTF-8")),
    };
    let text = text.strip_suffix('\r').unwrap_or(text);
    let mut cur = Cursor { src: text, pos: 0 };
    cur.skip_ws();
    if cur.at_end() || cur.peek() == Some('#') {
        return Ok(Line::Skip);
    }

    let s = cur.term()?;
    if !s.is_subject_kind() {
        return Err(cur.error_at(1, "literal not allowed as subject"));
    }
    cur.skip_ws();
    let p_col = cur.pos;
    let p = cur.term()?;
    if p.kind() != TermKind::Iri {
        return Err(ParseError::new(p_col + 1, "predicate must be an IRI"));
    }
    cur.skip_ws();
    let o = cur.term()?;
    cur.skip_ws();
    if cur.peek() != Some('.') {
        return Err(cur.error("expected '.' at end of triple"));
    }
    cur.bump();
    cur.skip_ws();
    if !cur.at_end() && cur.peek() != Some('#') {
        return Err(cur.error("unexpected content after '.'"));
    }
    Ok(Line::Triple(TermTriple { s, p, o }))
}

/// Parses a single term written in N-Triples syntax, e.g. `<http://x>`.
pub fn parse_term(text: &str) -> Result<Term, ParseError> {
    let mut cur = Cursor { src: text.trim(), pos: 0 };
    let t = cur.term()?;
    if !cur.at_end() {
        return Err(cur.error("trailing characters after term"));
    }
    Ok(t)
}

/// One canonical N-Triples line, without the newline.
pub fn serialize_triple(t: &TermTriple) -> String {
    format!("{} {} {} .", t.s, t.p, t.o)
}

pub fn write_triple<W: Write>(out: &mut W, t: &TermTriple) -> std::io::Result<()> {
    writeln!(out, "{} {} {} .", t.s, t.p, t.o)
}

pub(crate) fn escape_literal(value: &str, out: &mut String) {
    for c in value.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            '\u{8}' => out.push_str("\\b"),
            '\u{c}' => out.push_str("\\f"),
            c if (c as u32) < 0x20 || c == '\u{7f}' => {
                out.push_str(&format!("\\u{:04X}", c as u32));
            }
            c => out.push(c),
        }
    }
}

fn iri_char_needs_escape(c: char) -> bool {
    matches!(c, '\u{0}'..='\u{20}' | '<' | '>' | '"' | '{' | '}' | '|' | '^' | '`' | '\\')
}

fn push_uchar(c: char, out: &mut String) {
    let v = c as u32;
    if v <= 0xFFFF {
        out.push_str(&format!("\\u{v:04X}"));
    } else {
        out.push_str(&format!("\\U{v:08X}"));
    }
}

struct Cursor<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.peek()?;
        self.pos += c.len_utf8();
        Some(c)
    }

    fn at_end(&self) -> bool {
        self.pos >= self.src.len()
    }

    fn skip_ws(&mut self) {
        while matches!(self.peek(), Some(' ' | '\t')) {
            self.pos += 1;
        }
    }

    fn error(&self, reason: &str) -> ParseError {
        ParseError::new(self.pos + 1, reason)
    }

    fn error_at(&self, column: usize, reason: &str) -> ParseError {
        ParseError::new(column, reason)
    }

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Some('<') => self.iri().map(|i| Term::from_parts(TermKind::Iri, i)),
            Some('_') => self.blank(),
            Some('"') => self.literal(),
            Some(_) => Err(self.error("expected a term")),
            None => Err(self.error("unexpected end of line")),
        }
    }

    /// Returns the canonical `<...>` form.
    fn iri(&mut self) -> Result<String, ParseError> {
        let start = self.pos;
        self.bump();
        let mut out = String::from("<");
        loop {
            let at = self.pos;
            match self.bump() {
                None => return Err(ParseError::new(start + 1, "unterminated IRI")),
                Some('>') => break,
                Some('\\') => {
                    let c = self.uchar(at)?;
                    if iri_char_needs_escape(c) {
                        push_uchar(c, &mut out);
                    } else {
                        out.push(c);
                    }
                }
                Some(c) if iri_char_needs_escape(c) => {
                    return Err(ParseError::new(at + 1, format!("character {c:?} not allowed in IRI")));
                }
                Some(c) => out.push(c),
            }
        }
        out.push('>');
        Ok(out)
    }

    /// Parses the `u`/`U` escape following a backslash at `at`.
    fn uchar(&mut self, at: usize) -> Result<char, ParseError> {
        let width = match self.bump() {
            Some('u') => 4,
            Some('U') => 8,
            _ => return Err(ParseError::new(at + 1, "invalid escape")),
        };
        let end = self.pos + width;
        let hex = self
            .src
            .get(self.pos..end)
            .filter(|h| h.bytes().all(|b| b.is_ascii_hexdigit()))
            .ok_or_else(|| ParseError::new(at + 1, "invalid unicode escape"))?;
        let value = u32::from_str_radix(hex, 16).map_err(|_| ParseError::new(at + 1, "invalid unicode escape"))?;
        let c = char::from_u32(value).ok_or_else(|| ParseError::new(at + 1, "escape is not a unicode scalar value"))?;
        self.pos = end;
        Ok(c)
    }

    fn blank(&mut self) -> Result<Term, ParseError> {
        let start = self.pos;
        if !self.src[self.pos..].starts_with("_:") {
            return Err(self.error("expected '_:'"));
        }
        self.pos += 2;
        let label_start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_alphanumeric() || matches!(c, '_' | '-' | '.' | '\u{b7}') || (!c.is_ascii() && !c.is_whitespace()) {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
        // a trailing '.' terminates the triple rather than belonging to the label
        while self.pos > label_start && self.src.as_bytes()[self.pos - 1] == b'.' {
            self.pos -= 1;
        }
        let label = &self.src[label_start..self.pos];
        match label.chars().next() {
            None => return Err(ParseError::new(start + 1, "empty blank node label")),
            Some('-' | '.' | '\u{b7}') => return Err(ParseError::new(start + 1, "invalid blank node label")),
            _ => {}
        }
        Ok(Term::from_parts(TermKind::BlankNode, format!("_:{label}")))
    }

    fn literal(&mut self) -> Result<Term, ParseError> {
        let start = self.pos;
        self.bump();
        let mut value = String::new();
        loop {
            let at = self.pos;
            match self.bump() {
                None => return Err(ParseError::new(start + 1, "unterminated literal")),
                Some('"') => break,
                Some('\\') => {
                    let c = match self.peek() {
                        Some('t') => '\t',
                        Some('b') => '\u{8}',
                        Some('n') => '\n',
                        Some('r') => '\r',
                        Some('f') => '\u{c}',
                        Some('"') => '"',
                        Some('\'') => '\'',
                        Some('\\') => '\\',
                        Some('u' | 'U') => {
                            value.push(self.uchar(at)?);
                            continue;
                        }
                        _ => return Err(ParseError::new(at + 1, "invalid escape")),
                    };
                    self.bump();
                    value.push(c);
                }
                Some('\n' | '\r') => return Err(ParseError::new(at + 1, "raw line break in literal")),
                Some(c) => value.push(c),
            }
        }
        let mut lexical = String::with_capacity(value.len() + 2);
        lexical.push('"');
        escape_literal(&value, &mut lexical);
        lexical.push('"');

        match self.peek() {
            Some('@') => {
                let tag_start = self.pos;
                self.bump();
                let mut seen = 0;
                let mut segment_len = 0;
                while let Some(c) = self.peek() {
                    if c.is_ascii_alphabetic() || (seen > 0 && c.is_ascii_digit()) {
                        segment_len += 1;
                    } else if c == '-' && segment_len > 0 {
                        segment_len = 0;
                        seen += 1;
                    } else {
                        break;
                    }
                    self.bump();
                }
                let tag = &self.src[tag_start..self.pos];
                if tag.len() < 2 || segment_len == 0 || !tag.as_bytes()[1].is_ascii_alphabetic() {
                    return Err(ParseError::new(tag_start + 1, "invalid language tag"));
                }
                lexical.push_str(tag);
            }
            Some('^') => {
                if !self.src[self.pos..].starts_with("^^<") {
                    return Err(self.error("expected '^^<' datatype"));
                }
                self.pos += 2;
                lexical.push_str("^^");
                lexical.push_str(&self.iri()?);
            }
            _ => {}
        }
        Ok(Term::from_parts(TermKind::Literal, lexical))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// Stop at the first malformed line.
    #[default]
    Strict,
    /// Skip malformed lines and count them.
    Lax,
}

/// Streams triples out of an N-Triples source, one line at a time.
pub struct NTriplesReader<R> {
    source: R,
    buf: Vec<u8>,
    line: u64,
    mode: ParseMode,
    errors: u64,
    done: bool,
}

pub fn parse_ntriples_stream<R: BufRead>(source: R, mode: ParseMode) -> NTriplesReader<R> {
    NTriplesReader { source, buf: Vec::new(), line: 0, mode, errors: 0, done: false }
}

impl<R: BufRead> NTriplesReader<R> {
    /// Number of lines skipped in lax mode so far.
    pub fn error_count(&self) -> u64 {
        self.errors
    }

    /// Longest line buffer allocated so far, in bytes.
    pub fn buffer_capacity(&self) -> usize {
        self.buf.capacity()
    }
}

impl<R: BufRead> Iterator for NTriplesReader<R> {
    type Item = Result<TermTriple>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.source.read_until(b'\n', &mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    self.line += 1;
                    if self.buf.last() == Some(&b'\n') {
                        self.buf.pop();
                    }
                    match parse_ntriples_line(&self.buf) {
                        Ok(Line::Triple(t)) => return Some(Ok(t)),
                        Ok(Line::Skip) => {}
                        Err(e) if self.mode == ParseMode::Lax => {
                            let _ = e;
                            self.errors += 1;
                        }
                        Err(e) => {
                            self.done = true;
                            return Some(Err(Error::MalformedLine(e.at_line(self.line))));
                        }
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(e.into()));
                }
            }
        }
        None
    }
}
