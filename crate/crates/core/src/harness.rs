//! Monte Carlo experiment runner.
//!
//! Each replication draws its own uniform stream, seeded by
//! [`replication_seed`] from `(base seed, n, replication index)`. The seed
//! does not depend on the memory limit or the estimator, so every cell in the
//! same `n` column reuses the same streams: clipped and unclipped runs, and
//! the different estimators, are compared on matched input. Replications run
//! in parallel on the rayon pool and are reduced in index order, so results
//! do not depend on the thread count.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::estimators::{estimate, Variant};
use crate::scalar::KFactor;
use crate::segmenter::{Sample, Segmenter};
use crate::sources::UniformSource;
use crate::theory::ClipModel;

/// Replications per cell unless overridden.
pub const DEFAULT_REPETITIONS: u64 = 2000;

/// Replications per cell in the full-scale tables.
pub const FULL_REPETITIONS: u64 = 20_000;

/// Blocks per estimate, the 10% CV sample size.
pub const TABLE_BLOCKS: u64 = 109;

pub const TABLE1_N: [u64; 6] = [10, 100, 1_000, 10_000, 100_000, 1_000_000];
pub const TABLE2_N: [u64; 5] = [100, 1_000, 10_000, 100_000, 1_000_000];
pub const TABLE3_N: [u64; 6] = [100, 1_000, 10_000, 100_000, 1_000_000, 10_000_000];
pub const TABLE_K: [&str; 4] = ["2.7", "2.8", "2.9", "3.0"];

pub fn table_k_values() -> Vec<KFactor> {
    TABLE_K
        .iter()
        .map(|k| k.parse().expect("table K constants are valid decimals"))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n_values: Vec<u64>,
    /// Blocks per estimate (`l`).
    pub blocks: u64,
    /// Memory-limit multipliers; empty means unclipped.
    pub k_values: Vec<KFactor>,
    pub repetitions: u64,
    pub seed: u64,
    pub variants: Vec<Variant>,
}

impl ExperimentConfig {
    pub fn table1(repetitions: u64, seed: u64) -> Self {
        Self {
            n_values: TABLE1_N.to_vec(),
            blocks: TABLE_BLOCKS,
            k_values: Vec::new(),
            repetitions,
            seed,
            variants: vec![Variant::Floor, Variant::Debiased],
        }
    }

    pub fn table2(repetitions: u64, seed: u64) -> Self {
        Self {
            n_values: TABLE2_N.to_vec(),
            blocks: TABLE_BLOCKS,
            k_values: table_k_values(),
            repetitions,
            seed,
            variants: vec![Variant::Debiased],
        }
    }

    fn validate(&self) -> Result<()> {
        if self.repetitions == 0 {
            return Err(invalid("repetitions must be at least 1"));
        }
        if self.blocks == 0 {
            return Err(invalid("block count l must be at least 1"));
        }
        if self.variants.is_empty() {
            return Err(invalid("at least one estimator variant is required"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CellResult {
    pub n: u64,
    #[serde(rename = "K")]
    pub k: Option<KFactor>,
    pub c: Option<u64>,
    #[serde(rename = "l")]
    pub blocks: u64,
    pub repetitions: u64,
    pub bias_percent: f64,
    pub cv_percent: f64,
    pub mean_clip_count: f64,
    pub seed: u64,
    pub variant: Variant,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of replication `rep` for alphabet size `n`.
pub fn replication_seed(base: u64, n: u64, rep: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ n) ^ rep)
}

/// Draws `repetitions` independent samples of `blocks` blocks each.
pub fn run_replications(
    n: u64,
    blocks: u64,
    limit: Option<u64>,
    repetitions: u64,
    seed: u64,
) -> Result<Vec<Sample>> {
    if let Some(c) = limit {
        if c < 2 {
            return Err(invalid(format!("memory limit c={c} must be at least 2")));
        }
    }
    (0..repetitions)
        .into_par_iter()
        .map_init(Segmenter::new, |seg, rep| {
            let mut src = UniformSource::new(n, replication_seed(seed, n, rep))?;
            seg.collect_sample(&mut src, blocks, limit)
        })
        .collect()
}

/// Empirical bias and CV of a set of estimates, both in percent.
///
/// Two-pass mean and sample standard deviation (`reps - 1` denominator).
pub fn bias_and_cv(n: u64, estimates: &[u64]) -> (f64, f64) {
    let count = estimates.len() as f64;
    let mean = estimates.iter().map(|&x| x as f64).sum::<f64>() / count;
    let bias = (mean - n as f64) / n as f64 * 100.0;
    if estimates.len() < 2 {
        return (bias, 0.0);
    }
    let ss: f64 = estimates.iter().map(|&x| (x as f64 - mean).powi(2)).sum();
    let sd = (ss / (count - 1.0)).sqrt();
    let cv = if sd == 0.0 { 0.0 } else { sd / mean * 100.0 };
    (bias, cv)
}

fn aggregate(
    n: u64,
    k: Option<KFactor>,
    limit: Option<u64>,
    blocks: u64,
    seed: u64,
    variant: Variant,
    samples: &[Sample],
) -> Result<CellResult> {
    let estimates = samples
        .iter()
        .map(|s| estimate(variant, s.sum_sizes as f64 / s.blocks as f64, s.blocks))
        .collect::<Result<Vec<u64>>>()?;
    let (bias_percent, cv_percent) = bias_and_cv(n, &estimates);
    let mean_clip_count =
        samples.iter().map(|s| s.clip_count as f64).sum::<f64>() / samples.len() as f64;
    Ok(CellResult {
        n,
        k,
        c: limit,
        blocks,
        repetitions: samples.len() as u64,
        bias_percent,
        cv_percent,
        mean_clip_count,
        seed,
        variant,
    })
}

pub fn run_cell(
    n: u64,
    blocks: u64,
    limit: Option<u64>,
    repetitions: u64,
    seed: u64,
    variant: Variant,
) -> Result<CellResult> {
    if repetitions == 0 {
        return Err(invalid("repetitions must be at least 1"));
    }
    let samples = run_replications(n, blocks, limit, repetitions, seed)?;
    aggregate(n, None, limit, blocks, seed, variant, &samples)
}

/// Cross product `n_values x k_values x variants`, in that nesting order.
/// Each `(n, K)` pair is sampled once and shared by all variants.
pub fn run_table(config: &ExperimentConfig) -> Result<Vec<CellResult>> {
    config.validate()?;
    let ks: Vec<Option<KFactor>> = if config.k_values.is_empty() {
        vec![None]
    } else {
        config.k_values.iter().copied().map(Some).collect()
    };
    let mut cells = Vec::new();
    for &n in &config.n_values {
        for &k in &ks {
            let limit = k.map(|k| k.limit_for(n));
            let samples =
                run_replications(n, config.blocks, limit, config.repetitions, config.seed)?;
            for &variant in &config.variants {
                cells.push(aggregate(
                    n,
                    k,
                    limit,
                    config.blocks,
                    config.seed,
                    variant,
                    &samples,
                )?);
            }
        }
    }
    Ok(cells)
}

/// Predicted clipping bias for one `(n, K)` cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoryCell {
    pub n: u64,
    #[serde(rename = "K")]
    pub k: KFactor,
    pub c: u64,
    /// `-100 * epsilon_2`.
    pub bias_percent: f64,
}

pub fn theory_table(n_values: &[u64], k_values: &[KFactor]) -> Result<Vec<TheoryCell>> {
    let mut out = Vec::with_capacity(n_values.len() * k_values.len());
    for &n in n_values {
        let model = ClipModel::<f64>::new(n)?;
        for &k in k_values {
            let c = k.limit_for(n);
            out.push(TheoryCell {
                n,
                k,
                c,
                bias_percent: -100.0 * model.epsilon2(c)?,
            });
        }
    }
    Ok(out)
}

/// Theoretical minus empirical bias, in percentage points.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiffCell {
    pub n: u64,
    #[serde(rename = "K")]
    pub k: KFactor,
    pub difference_pp: f64,
}

/// Pairs every clipped empirical cell with the theory cell of the same
/// `(n, K)`. Extra theory cells are ignored; an empirical cell without a
/// theoretical partner, or without a K, is an error.
pub fn diff_tables(empirical: &[CellResult], theoretical: &[TheoryCell]) -> Result<Vec<DiffCell>> {
    empirical
        .iter()
        .map(|cell| {
            let Some(k) = cell.k else {
                return Err(Error::KeyMismatch {
                    n: cell.n,
                    k: "none".into(),
                });
            };
            let theory = theoretical
                .iter()
                .find(|t| t.n == cell.n && t.k == k)
                .ok_or_else(|| Error::KeyMismatch {
                    n: cell.n,
                    k: k.to_string(),
                })?;
            Ok(DiffCell {
                n: cell.n,
                k,
                difference_pp: theory.bias_percent - cell.bias_percent,
            })
        })
        .collect()
}
