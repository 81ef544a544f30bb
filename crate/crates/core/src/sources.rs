//! Symbol stream providers.
//!
//! Synthetic sources draw from ChaCha8 seeded with a 64-bit seed, so a
//! `(kind, n, seed)` triple always yields the same stream. Ingested input is
//! tokenized and dictionary-encoded to dense integer keys; the dictionary is
//! unbounded and separate from the segmenter's per-block table.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader};
use std::path::PathBuf;
use std::str::FromStr;

use rand::distributions::{Distribution, Uniform, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::segmenter::{Symbol, SymbolSource};

/// Name of the generator behind every synthetic source, recorded in reports.
pub const GENERATOR: &str = "ChaCha8";

/// I.i.d. uniform symbols over `0..n`.
#[derive(Clone, Debug)]
pub struct UniformSource {
    rng: ChaCha8Rng,
    range: Uniform<u64>,
}

impl UniformSource {
    pub fn new(n: u64, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(invalid("alphabet size n must be at least 1"));
        }
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            range: Uniform::new(0, n),
        })
    }
}

impl Iterator for UniformSource {
    type Item = Symbol;

    #[inline]
    fn next(&mut self) -> Option<Symbol> {
        Some(Symbol(self.range.sample(&mut self.rng)))
    }
}

/// Normalized power-law weights `w_i ∝ (i + 1)^(-skew)` for `i in 0..n`.
pub fn power_law_weights(n: u64, skew: f64) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(invalid("non-uniform source needs n >= 2"));
    }
    if !(skew.is_finite() && skew > 0.0) {
        return Err(invalid(format!(
            "skew must be positive and finite, got {skew}"
        )));
    }
    let raw: Vec<f64> = (1..=n).map(|i| (i as f64).powf(-skew)).collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// I.i.d. symbols with power-law weights; symbol 0 is the most frequent.
#[derive(Clone, Debug)]
pub struct PowerLawSource {
    rng: ChaCha8Rng,
    index: WeightedIndex<f64>,
}

impl PowerLawSource {
    pub fn new(n: u64, skew: f64, seed: u64) -> Result<Self> {
        let weights = power_law_weights(n, skew)?;
        let index = WeightedIndex::new(&weights).map_err(|e| invalid(e.to_string()))?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            index,
        })
    }
}

impl Iterator for PowerLawSource {
    type Item = Symbol;

    fn next(&mut self) -> Option<Symbol> {
        Some(Symbol(self.index.sample(&mut self.rng) as u64))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Tokenization {
    /// Each byte is a symbol.
    Byte,
    /// Each line (without its terminator) is a symbol.
    Line,
    /// Each run of non-whitespace bytes is a symbol.
    #[default]
    Whitespace,
}

impl FromStr for Tokenization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "byte" => Ok(Tokenization::Byte),
            "line" => Ok(Tokenization::Line),
            "whitespace" => Ok(Tokenization::Whitespace),
            _ => Err(invalid(format!(
                "unknown tokenization {s:?}; expected byte, line or whitespace"
            ))),
        }
    }
}

impl fmt::Display for Tokenization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tokenization::Byte => "byte",
            Tokenization::Line => "line",
            Tokenization::Whitespace => "whitespace",
        })
    }
}

/// Streaming tokenizer over a reader. Tokens are assigned keys in order of
/// first appearance.
pub struct TokenSource<R> {
    reader: R,
    tokenization: Tokenization,
    dictionary: HashMap<Vec<u8>, u64>,
    line: Vec<u8>,
    cursor: usize,
}

impl<R: BufRead> TokenSource<R> {
    pub fn new(reader: R, tokenization: Tokenization) -> Self {
        Self {
            reader,
            tokenization,
            dictionary: HashMap::new(),
            line: Vec::new(),
            cursor: 0,
        }
    }

    /// Distinct tokens seen so far.
    pub fn dictionary_len(&self) -> usize {
        self.dictionary.len()
    }

    fn encode(&mut self, token: &[u8]) -> Symbol {
        let next = self.dictionary.len() as u64;
        if let Some(&k) = self.dictionary.get(token) {
            return Symbol(k);
        }
        self.dictionary.insert(token.to_vec(), next);
        Symbol(next)
    }

    fn refill(&mut self) -> io::Result<bool> {
        self.line.clear();
        self.cursor = 0;
        Ok(self.reader.read_until(b'\n', &mut self.line)? > 0)
    }

    fn next_byte(&mut self) -> io::Result<Option<Symbol>> {
        let buf = self.reader.fill_buf()?;
        let Some(&b) = buf.first() else {
            return Ok(None);
        };
        self.reader.consume(1);
        Ok(Some(Symbol(u64::from(b))))
    }

    fn next_line(&mut self) -> io::Result<Option<Symbol>> {
        if !self.refill()? {
            return Ok(None);
        }
        let mut end = self.line.len();
        if self.line[..end].ends_with(b"\n") {
            end -= 1;
        }
        if self.line[..end].ends_with(b"\r") {
            end -= 1;
        }
        let token = std::mem::take(&mut self.line);
        let sym = self.encode(&token[..end]);
        self.line = token;
        Ok(Some(sym))
    }

    fn next_word(&mut self) -> io::Result<Option<Symbol>> {
        loop {
            let rest = &self.line[self.cursor..];
            let start = rest.iter().position(|b| !b.is_ascii_whitespace());
            if let Some(start) = start {
                let begin = self.cursor + start;
                let len = self.line[begin..]
                    .iter()
                    .position(u8::is_ascii_whitespace)
                    .unwrap_or(self.line.len() - begin);
                self.cursor = begin + len;
                let token = std::mem::take(&mut self.line);
                let sym = self.encode(&token[begin..begin + len]);
                self.line = token;
                return Ok(Some(sym));
            }
            if !self.refill()? {
                return Ok(None);
            }
        }
    }
}

impl<R: BufRead> SymbolSource for TokenSource<R> {
    fn next_symbol(&mut self) -> Result<Option<Symbol>> {
        let next = match self.tokenization {
            Tokenization::Byte => self.next_byte(),
            Tokenization::Line => self.next_line(),
            Tokenization::Whitespace => self.next_word(),
        };
        Ok(next?)
    }
}

/// Drops every `every`-th symbol of the inner stream (positions `every`,
/// `2 * every`, ...).
#[derive(Clone, Debug)]
pub struct Decimate<S> {
    inner: S,
    every: u64,
    position: u64,
}

pub fn decimate<S: SymbolSource>(inner: S, every: u64) -> Result<Decimate<S>> {
    if every < 2 {
        return Err(invalid("decimation period must be at least 2"));
    }
    Ok(Decimate {
        inner,
        every,
        position: 0,
    })
}

impl<S: SymbolSource> SymbolSource for Decimate<S> {
    fn next_symbol(&mut self) -> Result<Option<Symbol>> {
        loop {
            let Some(s) = self.inner.next_symbol()? else {
                return Ok(None);
            };
            self.position += 1;
            if !self.position.is_multiple_of(self.every) {
                return Ok(Some(s));
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SourceKind {
    Uniform,
    /// Power-law weights with the given exponent.
    PowerLaw {
        skew: f64,
    },
    File(PathBuf),
    Stdin,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec {
    pub kind: SourceKind,
    /// Alphabet size; ignored by ingestion kinds.
    pub n: u64,
    pub seed: u64,
    /// Ignored by synthetic kinds.
    pub tokenization: Tokenization,
}

impl SourceSpec {
    pub fn uniform(n: u64, seed: u64) -> Self {
        Self {
            kind: SourceKind::Uniform,
            n,
            seed,
            tokenization: Tokenization::default(),
        }
    }
}

pub fn make_source(spec: &SourceSpec) -> Result<Box<dyn SymbolSource>> {
    Ok(match &spec.kind {
        SourceKind::Uniform => Box::new(UniformSource::new(spec.n, spec.seed)?),
        SourceKind::PowerLaw { skew } => Box::new(PowerLawSource::new(spec.n, *skew, spec.seed)?),
        SourceKind::File(path) => {
            let file = File::open(path).map_err(|e| {
                Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
            })?;
            Box::new(TokenSource::new(BufReader::new(file), spec.tokenization))
        }
        SourceKind::Stdin => Box::new(TokenSource::new(
            BufReader::new(io::stdin()),
            spec.tokenization,
        )),
    })
}
