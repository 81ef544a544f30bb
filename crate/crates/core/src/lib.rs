//! Alphabet-size estimation for discrete uniform random sources.
//!
//! A symbol stream is cut into blocks, each ending at the first symbol that
//! repeats an earlier symbol of the same block. The mean block size grows as
//! `sqrt(pi * N / 2)`, so inverting that relation gives an estimate of the
//! alphabet size `N` in `O(sqrt(N))` time and space. A memory-bounded variant
//! stores at most `c` symbols per block and reports how often the bound was
//! hit.
//!
//! Modules:
//!
//! * [`segmenter`]: block detection over a symbol stream, with or without a
//!   memory limit.
//! * [`estimators`]: method-of-moments estimators and sample sizing.
//! * [`theory`]: exact and asymptotic block-size distribution, moments and
//!   clipping error.
//! * [`sources`]: seeded synthetic sources, token ingestion and decimation.
//! * [`harness`]: Monte Carlo tables and theory/experiment comparison.
//! * [`report`]: CSV and JSON emission for experiment tables.
//! * [`cli`]: the `collide-count` command line.
//!
//! The numeric code is generic over [`Real`] (`f32`, `f64`) and, where only
//! field arithmetic is needed, over [`Scalar`], which also admits the exact
//! rational type [`Exact`].

pub mod cli;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod report;
pub mod scalar;
pub mod segmenter;
pub mod sources;
pub mod theory;

pub use error::{Error, Result};
pub use estimators::{EstimateReport, Variant};
pub use harness::{CellResult, ExperimentConfig};
pub use scalar::{KFactor, Real, Scalar};
pub use segmenter::{BlockObservation, Sample, Segmenter, Symbol, SymbolSource};
pub use theory::{Kind, TheoryResult};

/// Exact rational scalar, usable wherever the code is generic over [`Scalar`].
pub type Exact = num_rational::BigRational;

/// Double-precision estimate report, the form the CLI emits.
pub type Report = EstimateReport<f64>;

/// Double-precision theory value.
pub type Theory = TheoryResult<f64>;
