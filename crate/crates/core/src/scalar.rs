//! Scalar traits and the exact memory-limit multiplier.

use std::fmt::{self, Debug, Display};
use std::iter::Sum;
use std::str::FromStr;

use num_rational::Ratio;
use num_traits::{Float, FloatConst, FromPrimitive, Num, ToPrimitive};
use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};

/// Field arithmetic plus integer conversion.
///
/// This is all the nested moment recursion needs, so it runs unchanged on
/// `f32`, `f64` and [`crate::Exact`].
pub trait Scalar: Clone + Num + FromPrimitive + Debug {}

impl<T> Scalar for T where T: Clone + Num + FromPrimitive + Debug {}

/// Floating-point scalar for log-domain and transcendental evaluation.
pub trait Real:
    Scalar + Float + FloatConst + ToPrimitive + Display + Sum + Send + Sync + 'static
{
    /// Converts a literal constant. Panics only if the literal is not
    /// representable, which never happens for the constants used here.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    fn count(x: u64) -> Self {
        Self::from_u64(x).expect("count representable in scalar type")
    }
}

impl Real for f32 {}
impl Real for f64 {}

const MAX_NUMER: u64 = 1_000_000_000_000;
const MAX_DENOM: u64 = 1_000_000_000;

/// Memory-limit multiplier `K` for `c = ceil(K * sqrt(n))`.
///
/// Held as an exact decimal fraction so the ceiling is decided in integer
/// arithmetic. `2.7 * sqrt(100)` is `27.000000000000004` in `f64`, which
/// would otherwise round up to 28.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KFactor(Ratio<u64>);

impl KFactor {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if numer == 0 || denom == 0 {
            return Err(invalid("K must be a positive finite number"));
        }
        let r = Ratio::new(numer, denom);
        if *r.numer() > MAX_NUMER || *r.denom() > MAX_DENOM {
            return Err(invalid(format!(
                "K = {numer}/{denom} is outside the supported range"
            )));
        }
        Ok(Self(r))
    }

    /// Interprets `x` through its shortest decimal representation, so
    /// `from_f64(2.9)` is exactly 29/10.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x <= 0.0 {
            return Err(invalid(format!("K must be positive and finite, got {x}")));
        }
        format!("{x}").parse()
    }

    pub fn as_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    /// Smallest `c` with `c >= K * sqrt(n)`, i.e. `(c * q)^2 >= p^2 * n`
    /// for `K = p / q`.
    pub fn limit_for(&self, n: u64) -> u64 {
        let p = u128::from(*self.0.numer());
        let q = u128::from(*self.0.denom());
        let target = p * p * u128::from(n);
        let fits = |c: u128| (c * q) * (c * q) >= target;

        let guess = (self.as_f64() * (n as f64).sqrt()).floor() as u128;
        let mut c = guess.saturating_sub(1);
        while c > 0 && fits(c) {
            c -= 1;
        }
        while !fits(c) {
            c += 1;
        }
        c as u64
    }
}

impl FromStr for KFactor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || {
            invalid(format!(
                "cannot parse K from {s:?}; expected a plain decimal"
            ))
        };
        let s = s.trim();
        let (int, frac) = match s.split_once('.') {
            Some((i, f)) => (i, f),
            None => (s, ""),
        };
        if int.is_empty() && frac.is_empty() {
            return Err(bad());
        }
        if !int.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let frac = frac.trim_end_matches('0');
        if frac.len() > 9 {
            return Err(bad());
        }
        let denom = 10u64.pow(frac.len() as u32);
        let int: u64 = if int.is_empty() {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let frac_val: u64 = if frac.is_empty() {
            0
        } else {
            frac.parse().map_err(|_| bad())?
        };
        let numer = int
            .checked_mul(denom)
            .and_then(|v| v.checked_add(frac_val))
            .ok_or_else(bad)?;
        Self::new(numer, denom)
    }
}

impl Display for KFactor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        Display::fmt(&self.as_f64(), f)
    }
}

impl Serialize for KFactor {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.as_f64())
    }
}
