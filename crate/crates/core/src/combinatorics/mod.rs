//! Exact integer and rational arithmetic, Stirling numbers of both kinds
//! and the real special functions used by the analytic formulas.
//!
//! Stirling tables are built once per process, up to `n_max` rows
//! (default 256, overridable through the `COALAB_NMAX` environment
//! variable) and shared read-only afterwards.

pub mod special;

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{CoalabError, Result};

pub use special::{
    gauss_legendre_unit, general_binomial, gumbel_cumulant, ln_abs_gamma, ln_gamma_ratio,
    log_gamma, reciprocal_gamma, zeta, EULER_GAMMA,
};

/// Arbitrary-precision signed integer.
pub type ExactInt = BigInt;

/// Arbitrary-precision rational, always in lowest terms with a positive
/// denominator.
pub type ExactRational = BigRational;

pub const DEFAULT_N_MAX: usize = 256;

/// Table size in effect for the shared Stirling tables.
pub fn configured_n_max() -> usize {
    static N_MAX: OnceLock<usize> = OnceLock::new();
    *N_MAX.get_or_init(|| {
        std::env::var("COALAB_NMAX")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&n| n > 0)
            .unwrap_or(DEFAULT_N_MAX)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StirlingKind {
    /// Signed numbers of the first kind, s(n, k).
    FirstSigned,
    /// Numbers of the second kind, S(n, k).
    Second,
}

/// Triangle of Stirling numbers for rows `0..=n_max`.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    kind: StirlingKind,
    n_max: usize,
    triangle: Vec<Vec<ExactInt>>,
}

impl StirlingTable {
    /// Builds the table with the recurrences
    /// s(n+1,k) = s(n,k−1) − n s(n,k) and S(n+1,k) = k S(n,k) + S(n,k−1).
    pub fn new(kind: StirlingKind, n_max: usize) -> Self {
        let mut triangle: Vec<Vec<ExactInt>> = Vec::with_capacity(n_max + 1);
        triangle.push(vec![BigInt::one()]);
        for n in 0..n_max {
            let prev = &triangle[n];
            let mut row = vec![BigInt::zero(); n + 2];
            for k in 1..=n + 1 {
                let left = &prev[k - 1];
                let same = prev.get(k);
                row[k] = match (kind, same) {
                    (_, None) => left.clone(),
                    (StirlingKind::FirstSigned, Some(s)) => left - s * BigInt::from(n),
                    (StirlingKind::Second, Some(s)) => s * BigInt::from(k) + left,
                };
            }
            triangle.push(row);
        }
        Self { kind, n_max, triangle }
    }

    pub fn kind(&self) -> StirlingKind {
        self.kind
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn get(&self, n: usize, k: usize) -> Result<&ExactInt> {
        static ZERO: OnceLock<BigInt> = OnceLock::new();
        if n > self.n_max || k > self.n_max {
            return Err(CoalabError::Range(format!(
                "Stirling index ({n}, {k}) exceeds n_max = {}",
                self.n_max
            )));
        }
        Ok(self.triangle[n].get(k).unwrap_or_else(|| ZERO.get_or_init(BigInt::zero)))
    }

    pub fn row(&self, n: usize) -> Option<&[ExactInt]> {
        self.triangle.get(n).map(Vec::as_slice)
    }
}

fn shared_table(kind: StirlingKind) -> &'static StirlingTable {
    static FIRST: OnceLock<StirlingTable> = OnceLock::new();
    static SECOND: OnceLock<StirlingTable> = OnceLock::new();
    let cell = match kind {
        StirlingKind::FirstSigned => &FIRST,
        StirlingKind::Second => &SECOND,
    };
    cell.get_or_init(|| StirlingTable::new(kind, configured_n_max()))
}

/// Signed Stirling number of the first kind s(n, k).
pub fn stirling_first(n: usize, k: usize) -> Result<ExactInt> {
    shared_table(StirlingKind::FirstSigned).get(n, k).cloned()
}

/// Stirling number of the second kind S(n, k).
pub fn stirling_second(n: usize, k: usize) -> Result<ExactInt> {
    shared_table(StirlingKind::Second).get(n, k).cloned()
}

/// Borrowing access to the shared tables, for hot loops.
pub fn stirling_first_ref(n: usize, k: usize) -> Result<&'static ExactInt> {
    shared_table(StirlingKind::FirstSigned).get(n, k)
}

pub fn stirling_second_ref(n: usize, k: usize) -> Result<&'static ExactInt> {
    shared_table(StirlingKind::Second).get(n, k)
}

pub fn factorial(n: usize) -> ExactInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Falling factorial n (n−1) ⋯ (n−k+1).
pub fn falling_factorial(n: usize, k: usize) -> ExactInt {
    if k > n {
        return BigInt::zero();
    }
    ((n - k + 1)..=n).fold(BigInt::one(), |acc, m| acc * BigInt::from(m))
}

pub fn binomial(n: usize, k: usize) -> ExactInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for m in 0..k {
        acc = acc * BigInt::from(n - m) / BigInt::from(m + 1);
    }
    acc
}

/// (−1)^e as an exact integer.
pub fn sign_pow(e: usize) -> ExactInt {
    if e % 2 == 0 {
        BigInt::one()
    } else {
        -BigInt::one()
    }
}

pub fn ratio(num: ExactInt, den: ExactInt) -> ExactRational {
    BigRational::new(num, den)
}

pub fn int_rational(v: impl Into<BigInt>) -> ExactRational {
    BigRational::from_integer(v.into())
}

/// Exact rational value of a finite double.
pub fn rational_from_f64(x: f64) -> Result<ExactRational> {
    BigRational::from_float(x)
        .ok_or_else(|| CoalabError::Domain(format!("{x} has no rational value")))
}

/// Correctly rounded conversion of a rational to the nearest double.
pub fn rational_to_f64(q: &ExactRational) -> f64 {
    if q.is_zero() {
        return 0.0;
    }
    let neg = q.is_negative();
    let num = q.numer().abs();
    let den = q.denom().clone();
    // Scale so that the integer quotient carries 64+ significant bits,
    // then let the final conversion round.
    let shift = num.bits() as i64 - den.bits() as i64 - 66;
    let (n, d) = if shift >= 0 {
        (num, den << (shift as usize))
    } else {
        (num << ((-shift) as usize), den)
    };
    let (quot, rem) = num_integer::Integer::div_rem(&n, &d);
    // Sticky bit keeps round-to-nearest honest.
    let quot = if rem.is_zero() { quot } else { (quot << 1usize) | BigInt::one() };
    let extra = if rem.is_zero() { 0 } else { 1 };
    let mantissa = quot.to_f64().unwrap_or(f64::INFINITY);
    let v = ldexp(mantissa, shift - extra);
    if neg {
        -v
    } else {
        v
    }
}

fn ldexp(mut x: f64, mut e: i64) -> f64 {
    while e > 500 {
        x *= 2f64.powi(500);
        e -= 500;
    }
    while e < -500 {
        x *= 2f64.powi(-500);
        e += 500;
    }
    x * 2f64.powi(e as i32)
}
