//! Block segmentation of a symbol stream.
//!
//! A block runs from the current position up to and including the first
//! symbol that equals an earlier symbol of the same block. Its length `W` is
//! at least 2 and, for an alphabet of `N` symbols, at most `N + 1`.
//!
//! With a memory limit `c` the segmenter reads at most `c` symbols per block.
//! If none of them repeats, the block is reported as size `c + 1` and marked
//! clipped; the next block starts right after the `c`-th symbol.

use rustc_hash::FxHashSet;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Canonical symbol key. Only equality is meaningful.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Symbol(pub u64);

/// Pull-based symbol stream. `Ok(None)` means the stream is exhausted.
pub trait SymbolSource {
    fn next_symbol(&mut self) -> Result<Option<Symbol>>;
}

impl<I: Iterator<Item = Symbol>> SymbolSource for I {
    #[inline]
    fn next_symbol(&mut self) -> Result<Option<Symbol>> {
        Ok(self.next())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BlockObservation {
    pub size: u64,
    pub clipped: bool,
}

/// Aggregate of `blocks` observations.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Sample {
    pub blocks: u64,
    pub sum_sizes: u64,
    /// Number of blocks that hit the memory limit (`Y`).
    pub clip_count: u64,
}

impl Sample {
    pub fn push(&mut self, obs: BlockObservation) {
        self.blocks += 1;
        self.sum_sizes += obs.size;
        if obs.clipped {
            self.clip_count += 1;
        }
    }

    /// Sample mean of the block sizes. `None` for an empty sample.
    pub fn mean<R: Real>(&self) -> Option<R> {
        (self.blocks > 0).then(|| R::count(self.sum_sizes) / R::count(self.blocks))
    }
}

/// Reusable block detector. The per-block table keeps its allocation between
/// blocks and is emptied at the start of each one.
#[derive(Debug, Default)]
pub struct Segmenter {
    seen: FxHashSet<Symbol>,
    peak: usize,
}

impl Segmenter {
    pub fn new() -> Self {
        Self::default()
    }

    /// Largest number of symbols the table has held at once.
    pub fn peak_occupancy(&self) -> usize {
        self.peak
    }

    /// Reads one unclipped block.
    pub fn next_block<S>(&mut self, stream: &mut S) -> Result<BlockObservation>
    where
        S: SymbolSource + ?Sized,
    {
        self.seen.clear();
        let mut read = 0u64;
        loop {
            let Some(s) = stream.next_symbol()? else {
                return Err(Error::InsufficientInput {
                    blocks_completed: 0,
                    partial_symbols: read,
                });
            };
            read += 1;
            if !self.seen.insert(s) {
                return Ok(BlockObservation {
                    size: read,
                    clipped: false,
                });
            }
            self.peak = self.peak.max(self.seen.len());
        }
    }

    /// Reads one block storing at most `limit` symbols.
    ///
    /// The loop bound is the limit itself: after `limit` distinct symbols the
    /// block is reported as `limit + 1` without reading the next symbol.
    pub fn next_block_clipped<S>(&mut self, stream: &mut S, limit: u64) -> Result<BlockObservation>
    where
        S: SymbolSource + ?Sized,
    {
        if limit == 0 {
            return Err(invalid("memory limit c must be at least 1"));
        }
        self.seen.clear();
        for j in 1..=limit {
            let Some(s) = stream.next_symbol()? else {
                return Err(Error::InsufficientInput {
                    blocks_completed: 0,
                    partial_symbols: j - 1,
                });
            };
            if !self.seen.insert(s) {
                return Ok(BlockObservation {
                    size: j,
                    clipped: false,
                });
            }
            self.peak = self.peak.max(self.seen.len());
        }
        Ok(BlockObservation {
            size: limit + 1,
            clipped: true,
        })
    }

    pub fn next_block_with<S>(
        &mut self,
        stream: &mut S,
        limit: Option<u64>,
    ) -> Result<BlockObservation>
    where
        S: SymbolSource + ?Sized,
    {
        match limit {
            Some(c) => self.next_block_clipped(stream, c),
            None => self.next_block(stream),
        }
    }

    /// Collects `blocks` consecutive blocks into a [`Sample`].
    ///
    /// On premature end of input the error reports how many blocks completed.
    pub fn collect_sample<S>(
        &mut self,
        stream: &mut S,
        blocks: u64,
        limit: Option<u64>,
    ) -> Result<Sample>
    where
        S: SymbolSource + ?Sized,
    {
        if blocks == 0 {
            return Err(invalid("block count l must be at least 1"));
        }
        let mut sample = Sample::default();
        for done in 0..blocks {
            match self.next_block_with(stream, limit) {
                Ok(obs) => sample.push(obs),
                Err(Error::InsufficientInput {
                    partial_symbols, ..
                }) => {
                    return Err(Error::InsufficientInput {
                        blocks_completed: done,
                        partial_symbols,
                    })
                }
                Err(e) => return Err(e),
            }
        }
        Ok(sample)
    }
}
