//! Method-of-moments estimators of the alphabet size.
//!
//! Inverting `E(W) ~ sqrt(pi N / 2) + 2/3` gives `N ~ (2/pi)(E(W) - 2/3)^2`;
//! every estimator here plugs the sample mean into a quadratic of that shape
//! and rounds down once, at the end.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;
use crate::segmenter::Sample;

/// Relative bias of the plain quadratic estimator is about `DEBIAS / l`.
pub const DEBIAS: f64 = 0.27;

/// `CV^2 ~ CV_CONSTANT / l` for large alphabets.
pub const CV_CONSTANT: f64 = 1.09;

/// Least-squares fit coefficients `a W^2 - b W + c` of the simulation-fitted
/// quadratic.
#[allow(clippy::approx_constant)]
pub const LEAST_SQUARES: (f64, f64, f64) = (0.6366, 0.8493, 0.1272);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// `floor((2/pi)(mean - 2/3)^2)`
    Floor,
    /// The floor estimator divided by `1 + 0.27/l`; preferred for large N.
    Debiased,
    /// Simulation-fitted quadratic, shipped as an optional alternative.
    LeastSquares,
}

impl Variant {
    pub fn as_str(&self) -> &'static str {
        match self {
            Variant::Floor => "floor",
            Variant::Debiased => "debiased",
            Variant::LeastSquares => "least-squares",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "floor" => Ok(Variant::Floor),
            "debiased" => Ok(Variant::Debiased),
            "least-squares" | "ls" => Ok(Variant::LeastSquares),
            _ => Err(invalid(format!(
                "unknown variant {s:?}; expected floor, debiased or least-squares"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateReport<R> {
    pub n_hat: u64,
    pub mean_w: R,
    #[serde(rename = "l")]
    pub blocks: u64,
    #[serde(rename = "c")]
    pub limit: Option<u64>,
    #[serde(rename = "clip_count_y")]
    pub clip_count: u64,
    pub variant: Variant,
}

fn check_mean<R: Real>(mean_w: R) -> Result<()> {
    if mean_w.is_finite() && mean_w >= R::lit(2.0) {
        Ok(())
    } else {
        Err(invalid(format!(
            "mean block size must be at least 2, got {mean_w}"
        )))
    }
}

fn floor_count<R: Real>(x: R) -> u64 {
    x.floor().to_u64().unwrap_or(u64::MAX)
}

/// `(2/pi)(mean - 2/3)^2` before rounding.
fn quadratic<R: Real>(mean_w: R) -> R {
    let d = mean_w - R::lit(2.0) / R::lit(3.0);
    R::FRAC_2_PI() * d * d
}

pub fn estimate_floor<R: Real>(mean_w: R) -> Result<u64> {
    check_mean(mean_w)?;
    Ok(floor_count(quadratic(mean_w)))
}

pub fn estimate_debiased<R: Real>(mean_w: R, blocks: u64) -> Result<u64> {
    check_mean(mean_w)?;
    if blocks == 0 {
        return Err(invalid("block count l must be at least 1"));
    }
    let factor = R::one() / (R::one() + R::lit(DEBIAS) / R::count(blocks));
    Ok(floor_count(factor * quadratic(mean_w)))
}

pub fn estimate_least_squares<R: Real>(mean_w: R) -> Result<u64> {
    check_mean(mean_w)?;
    let (a, b, c) = LEAST_SQUARES;
    let v = R::lit(a) * mean_w * mean_w - R::lit(b) * mean_w + R::lit(c);
    Ok(floor_count(v))
}

pub fn estimate<R: Real>(variant: Variant, mean_w: R, blocks: u64) -> Result<u64> {
    match variant {
        Variant::Floor => estimate_floor(mean_w),
        Variant::Debiased => estimate_debiased(mean_w, blocks),
        Variant::LeastSquares => estimate_least_squares(mean_w),
    }
}

/// Number of blocks needed for a target coefficient of variation,
/// `ceil(1.09 / cv^2)`.
pub fn blocks_for_cv<R: Real>(target_cv: R) -> Result<u64> {
    if !(target_cv > R::zero() && target_cv < R::one()) {
        return Err(invalid(format!(
            "target CV must lie in (0, 1), got {target_cv}"
        )));
    }
    let x = R::lit(CV_CONSTANT) / (target_cv * target_cv);
    // 1.09 / 0.1^2 is 108.99999999999997 in f64; snap values within
    // rounding noise of an integer before taking the ceiling.
    let nearest = x.round();
    let l = if (x - nearest).abs() <= x * R::lit(1e-9) {
        nearest
    } else {
        x.ceil()
    };
    Ok(l.to_u64().unwrap_or(u64::MAX).max(1))
}

pub fn estimate_from_sample<R: Real>(
    sample: &Sample,
    variant: Variant,
    limit: Option<u64>,
) -> Result<EstimateReport<R>> {
    let mean_w: R = sample
        .mean()
        .ok_or_else(|| invalid("sample must contain at least one block"))?;
    Ok(EstimateReport {
        n_hat: estimate(variant, mean_w, sample.blocks)?,
        mean_w,
        blocks: sample.blocks,
        limit,
        clip_count: sample.clip_count,
        variant,
    })
}
