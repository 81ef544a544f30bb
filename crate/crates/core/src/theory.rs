//! Block-size distribution, moments and clipping error for a uniform source
//! over `n` symbols.
//!
//! `Pr(W > k)` is the no-collision probability of `k` draws, the falling
//! factorial ratio `n(n-1)...(n-k+1) / n^k`. It is always evaluated as a
//! running sum of logarithms. Moments come from the one-step recursion
//!
//! ```text
//! m_k = a_k + (n - k)/n * m_{k+1},   m_n = a_n,   a_k = (k+1)^j - k^j
//! E(W^j | W > c) = c^j + m_c
//! ```
//!
//! folded iteratively from `k = n` down to `k = c`. The recursion uses only
//! field operations, so it is generic over [`Scalar`] and runs exactly on
//! [`crate::Exact`].
//!
//! Every public quantity has one exact or one approximate form; callers pick
//! explicitly and [`Kind`] records which one ran.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::estimators::{CV_CONSTANT, DEBIAS};
use crate::scalar::{Real, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Exact,
    Asymptotic,
    Approximation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoryResult<R> {
    pub value: R,
    pub kind: Kind,
}

impl<R> TheoryResult<R> {
    pub fn exact(value: R) -> Self {
        Self {
            value,
            kind: Kind::Exact,
        }
    }

    pub fn asymptotic(value: R) -> Self {
        Self {
            value,
            kind: Kind::Asymptotic,
        }
    }

    pub fn approximation(value: R) -> Self {
        Self {
            value,
            kind: Kind::Approximation,
        }
    }
}

/// Truncation order of the expansion of `E(W)` in powers of `n^{-1/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Truncation {
    /// `sqrt(pi n / 2) + 2/3`
    TwoTerm,
    /// Adds `(1/12)sqrt(pi/2n) - 4/(135 n) + (1/288)sqrt(pi/(2 n^3))`.
    FiveTerm,
}

impl TryFrom<u32> for Truncation {
    type Error = crate::Error;

    fn try_from(terms: u32) -> Result<Self> {
        match terms {
            2 => Ok(Truncation::TwoTerm),
            5 => Ok(Truncation::FiveTerm),
            _ => Err(invalid(format!(
                "expansion terms must be 2 or 5, got {terms}"
            ))),
        }
    }
}

fn require_alphabet(n: u64) -> Result<()> {
    if n == 0 {
        Err(invalid("alphabet size n must be at least 1"))
    } else {
        Ok(())
    }
}

fn require_blocks(l: u64) -> Result<()> {
    if l == 0 {
        Err(invalid("block count l must be at least 1"))
    } else {
        Ok(())
    }
}

/// `ln Pr(W > c)`; `-inf` when `c > n`.
pub fn log_tail_prob<R: Real>(n: u64, c: u64) -> R {
    if c <= 1 {
        return R::zero();
    }
    if c > n {
        return R::neg_infinity();
    }
    let nn = R::count(n);
    (1..c).map(|k| (-R::count(k) / nn).ln_1p()).sum()
}

/// `Pr(W > c)`. Total: 1 for `c <= 1`, 0 for `c > n`.
pub fn tail_prob<R: Real>(n: u64, c: u64) -> R {
    log_tail_prob::<R>(n, c).exp()
}

/// Small-`c/n` approximation `exp(-c(c-1)/(2n))`.
pub fn tail_prob_approx<R: Real>(n: u64, c: u64) -> Result<R> {
    require_alphabet(n)?;
    let c = R::count(c);
    Ok((-(c * (c - R::one())) / (R::lit(2.0) * R::count(n))).exp())
}

/// `Pr(W > K sqrt(n)) ~ exp(-K^2 / 2)`.
pub fn tail_prob_approx_k<R: Real>(k: R) -> R {
    (-(k * k) / R::lit(2.0)).exp()
}

/// `Pr(W = k)`; zero outside `2..=n+1`.
pub fn pmf<R: Real>(n: u64, k: u64) -> R {
    if n == 0 || k < 2 || k > n + 1 {
        return R::zero();
    }
    let ratio = log_tail_prob::<R>(n, k - 1).exp();
    ratio * R::count(k - 1) / R::count(n)
}

/// `E(W^j | W > c)` for `0 <= c <= n`, by the nested recursion.
///
/// `c` of 0 or 1 gives the unconditional moment `E(W^j)`.
pub fn conditional_moment<S: Scalar>(n: u64, j: u32, c: u64) -> Result<S> {
    require_alphabet(n)?;
    if j == 0 {
        return Err(invalid("moment order j must be at least 1"));
    }
    if c > n {
        return Err(invalid(format!(
            "threshold c={c} exceeds alphabet size n={n}"
        )));
    }
    let power = |k: u64| -> S { num_traits::pow(from_count::<S>(k), j as usize) };
    let growth = |k: u64| -> S { power(k + 1) - power(k) };
    let nn = from_count::<S>(n);

    let mut m = growth(n);
    for k in (c..n).rev() {
        m = growth(k) + from_count::<S>(n - k) * m / nn.clone();
    }
    Ok(power(c) + m)
}

fn from_count<S: Scalar>(k: u64) -> S {
    S::from_u64(k).expect("count representable in scalar type")
}

/// `E(W) = 1 + Q(n)`.
pub fn mean_w_exact<S: Scalar>(n: u64) -> Result<S> {
    conditional_moment(n, 1, 0)
}

/// `Q(n) = sum_{k=1}^{n} n^(k falling) / n^k`.
pub fn ramanujan_q<S: Scalar>(n: u64) -> Result<S> {
    Ok(mean_w_exact::<S>(n)? - S::one())
}

pub fn mean_w_asymptotic<R: Real>(n: u64, truncation: Truncation) -> Result<R> {
    if n < 2 {
        return Err(invalid("asymptotic mean needs n >= 2"));
    }
    let nn = R::count(n);
    let half_pi = R::FRAC_PI_2();
    let two_term = (half_pi * nn).sqrt() + R::lit(2.0) / R::lit(3.0);
    Ok(match truncation {
        Truncation::TwoTerm => two_term,
        Truncation::FiveTerm => {
            two_term + (half_pi / nn).sqrt() / R::lit(12.0) - R::lit(4.0) / (R::lit(135.0) * nn)
                + (half_pi / (nn * nn * nn)).sqrt() / R::lit(288.0)
        }
    })
}

/// `Var(W) = 2n + E(W) - E(W)^2`.
pub fn var_w_exact<S: Scalar>(n: u64) -> Result<S> {
    let mean = mean_w_exact::<S>(n)?;
    Ok(from_count::<S>(2 * n) + mean.clone() - mean.clone() * mean)
}

/// Large-`n` form `(2 - pi/2) n - (4/3) sqrt(pi n / 2)`. It drops the `+E(W)`
/// term, so it runs about `sqrt(pi n / 2)` below [`var_w_exact`].
pub fn var_w_large_n<R: Real>(n: u64) -> Result<R> {
    require_alphabet(n)?;
    let nn = R::count(n);
    Ok((R::lit(2.0) - R::FRAC_PI_2()) * nn
        - R::lit(4.0) / R::lit(3.0) * (R::FRAC_PI_2() * nn).sqrt())
}

/// Relative bias `alpha` of the plain quadratic estimator with exact `E(W)`:
/// `(1/n)(2/pi)(2n - E(W)^2 + E(W)) / l`.
pub fn bias_alpha<R: Real>(n: u64, l: u64) -> Result<R> {
    if n < 2 {
        return Err(invalid("bias alpha needs n >= 2"));
    }
    require_blocks(l)?;
    let var = var_w_exact::<R>(n)?;
    Ok(R::FRAC_2_PI() * var / R::count(n) / R::count(l))
}

pub fn bias_alpha_large_n<R: Real>(l: u64) -> Result<R> {
    require_blocks(l)?;
    Ok(R::lit(DEBIAS) / R::count(l))
}

/// First-order squared CV of the estimate with exact `E(W)`:
/// `(1/l)(8/pi)(2 - E(W)(E(W) - 1)/n)`.
pub fn cv_squared<R: Real>(n: u64, l: u64) -> Result<R> {
    if n < 2 {
        return Err(invalid("CV needs n >= 2"));
    }
    require_blocks(l)?;
    let mean = mean_w_exact::<R>(n)?;
    let inner = R::lit(2.0) - mean * (mean - R::one()) / R::count(n);
    Ok(R::lit(8.0) * R::FRAC_1_PI() * inner / R::count(l))
}

pub fn cv_squared_large_n<R: Real>(l: u64) -> Result<R> {
    require_blocks(l)?;
    Ok(R::lit(CV_CONSTANT) / R::count(l))
}

/// Clipping analysis for one alphabet size; caches `E(W)` across limits.
#[derive(Clone, Copy, Debug)]
pub struct ClipModel<R> {
    n: u64,
    mean: R,
}

impl<R: Real> ClipModel<R> {
    pub fn new(n: u64) -> Result<Self> {
        if n < 2 {
            return Err(invalid("clipping analysis needs n >= 2"));
        }
        Ok(Self {
            n,
            mean: mean_w_exact(n)?,
        })
    }

    pub fn mean(&self) -> R {
        self.mean
    }

    fn check_limit(&self, c: u64) -> Result<()> {
        if c < 2 || c > self.n {
            return Err(invalid(format!(
                "memory limit c={c} must satisfy 2 <= c <= n={}",
                self.n
            )));
        }
        Ok(())
    }

    /// `(E(W | W > c) - (c + 1)) / E(W)`: the mean overshoot of a clipped
    /// block, relative to the mean block size.
    pub fn overshoot(&self, c: u64) -> Result<R> {
        self.check_limit(c)?;
        let cond = conditional_moment::<R>(self.n, 1, c)?;
        Ok((cond - R::count(c + 1)) / self.mean)
    }

    /// `epsilon_1 = Pr(W > c) * overshoot(c)`, so `E(W_c) = E(W)(1 - epsilon_1)`.
    pub fn epsilon1(&self, c: u64) -> Result<R> {
        Ok(tail_prob::<R>(self.n, c) * self.overshoot(c)?)
    }

    /// `epsilon_2 = epsilon_1 (2 - epsilon_1)`, the relative underestimate of
    /// `n`. Positive; the induced bias is `-epsilon_2`.
    pub fn epsilon2(&self, c: u64) -> Result<R> {
        let e1 = self.epsilon1(c)?;
        Ok(e1 * (R::lit(2.0) - e1))
    }

    /// `E(W_c)`, the mean of the clipped block size.
    pub fn clipped_mean(&self, c: u64) -> Result<R> {
        Ok(self.mean * (R::one() - self.epsilon1(c)?))
    }
}

pub fn clip_epsilon1<R: Real>(n: u64, c: u64) -> Result<R> {
    ClipModel::<R>::new(n)?.epsilon1(c)
}

pub fn clip_epsilon2<R: Real>(n: u64, c: u64) -> Result<R> {
    ClipModel::<R>::new(n)?.epsilon2(c)
}
