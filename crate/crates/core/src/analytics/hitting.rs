use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    factorial, gauss_legendre_unit, int_rational, ln_gamma_ratio, rational_to_f64, ratio,
    reciprocal_gamma, sign_pow, stirling_first_ref, stirling_second_ref, ExactRational,
    EULER_GAMMA,
};
use crate::error::{CoalabError, Result};

const QUADRATURE_NODES: usize = 64;

/// Degree up to which the integrand Γ(m+x)/(Γ(x) m!) is expanded as a
/// rising-factorial product instead of through log-gamma ratios.
const PRODUCT_INTEGRAND_MAX: usize = 100;

/// Ways of computing h(i, j), the probability that the fixation line
/// started at i ever visits j.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HittingMethod {
    /// Renewal sum over the iid jump-chain increments, exact.
    Convolution,
    /// Double Stirling sum, exact.
    StirlingDouble,
    /// Single first-kind Stirling sum after the shift h(i,j) = h(1, j−i+1), exact.
    StirlingShift,
    /// Gauss–Legendre quadrature of ∫_0^1 Γ(m+x)/Γ(x) dx / m!.
    Integral,
    /// Coefficient extraction from z^i / ((1−z)(−log(1−z))).
    GfSeries,
}

impl HittingMethod {
    pub const ALL: [HittingMethod; 5] = [
        HittingMethod::Convolution,
        HittingMethod::StirlingDouble,
        HittingMethod::StirlingShift,
        HittingMethod::Integral,
        HittingMethod::GfSeries,
    ];

    pub fn name(self) -> &'static str {
        match self {
            HittingMethod::Convolution => "convolution",
            HittingMethod::StirlingDouble => "stirling-double",
            HittingMethod::StirlingShift => "stirling-shift",
            HittingMethod::Integral => "integral",
            HittingMethod::GfSeries => "gf-series",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(
            self,
            HittingMethod::Convolution | HittingMethod::StirlingDouble | HittingMethod::StirlingShift
        )
    }
}

impl fmt::Display for HittingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for HittingMethod {
    type Err = CoalabError;

    fn from_str(s: &str) -> Result<Self> {
        HittingMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| CoalabError::Domain(format!("unknown hitting method '{s}'")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HittingValue {
    Exact(ExactRational),
    Real(f64),
}

impl HittingValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            HittingValue::Exact(q) => rational_to_f64(q),
            HittingValue::Real(v) => *v,
        }
    }

    pub fn exact(&self) -> Option<&ExactRational> {
        match self {
            HittingValue::Exact(q) => Some(q),
            HittingValue::Real(_) => None,
        }
    }
}

pub fn hitting_probability(i: usize, j: usize, method: HittingMethod) -> Result<HittingValue> {
    if i == 0 {
        return Err(CoalabError::Range("states start at 1".into()));
    }
    let wrap = |q: ExactRational| {
        if method.is_exact() {
            HittingValue::Exact(q)
        } else {
            HittingValue::Real(rational_to_f64(&q))
        }
    };
    if j < i {
        return Ok(wrap(ExactRational::zero()));
    }
    if j == i {
        return Ok(wrap(ExactRational::one()));
    }
    let m = j - i;
    Ok(match method {
        HittingMethod::Convolution => HittingValue::Exact(renewal_exact(m)),
        HittingMethod::StirlingDouble => {
            // (−1)^{i+j} i!/(j−1)! Σ_{k=i}^{j} s(j,k) S(k,i) / k
            let mut acc = ExactRational::zero();
            for k in i..=j {
                let num = stirling_first_ref(j, k)? * stirling_second_ref(k, i)?;
                acc += ratio(num, BigInt::from(k));
            }
            HittingValue::Exact(acc * ratio(sign_pow(i + j) * factorial(i), factorial(j - 1)))
        }
        HittingMethod::StirlingShift => {
            // (−1)^{j−i}/(j−i)! Σ_{k=1}^{j−i+1} s(j−i+1,k)/k
            let top = m + 1;
            let mut acc = ExactRational::zero();
            for k in 1..=top {
                acc += ratio(stirling_first_ref(top, k)?.clone(), BigInt::from(k));
            }
            HittingValue::Exact(acc * ratio(sign_pow(m), factorial(m)))
        }
        HittingMethod::Integral => HittingValue::Real(integral_form(m)?),
        HittingMethod::GfSeries => {
            let coeffs = hitting_gf_coefficients(i, j)?;
            HittingValue::Real(*coeffs.last().expect("j >= i"))
        }
    })
}

/// u(m) = Σ_k P(η_1 + ⋯ + η_k = m) by the renewal recursion
/// u(m) = Σ_{n=1}^{m} P(η = n) u(m−n), P(η = n) = 1/(n(n+1)).
fn renewal_exact(m: usize) -> ExactRational {
    let step: Vec<ExactRational> = (0..=m)
        .map(|n| if n == 0 { ExactRational::zero() } else { ratio(BigInt::one(), BigInt::from(n * (n + 1))) })
        .collect();
    let mut u = vec![ExactRational::one()];
    for total in 1..=m {
        let mut acc = ExactRational::zero();
        for n in 1..=total {
            acc += &step[n] * &u[total - n];
        }
        u.push(acc);
    }
    u.pop().expect("non-empty")
}

/// Floating-point renewal sequence h(1, m+1) for m = 0..=m_max, O(m_max²).
pub fn hitting_renewal_f64(m_max: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(m_max + 1);
    u.push(1.0);
    for total in 1..=m_max {
        let mut acc = 0.0;
        for n in 1..=total {
            let nf = n as f64;
            acc += u[total - n] / (nf * (nf + 1.0));
        }
        u.push(acc);
    }
    u
}

fn integral_form(m: usize) -> Result<f64> {
    let rule = gauss_legendre_unit(QUADRATURE_NODES);
    let mut acc = 0.0;
    for &(x, w) in &rule {
        let f = if x == 0.0 {
            0.0
        } else if m <= PRODUCT_INTEGRAND_MAX {
            // Γ(m+x)/(Γ(x) m!) = (x/m) Π_{r=1}^{m−1} (x+r)/r
            let mut p = x / m as f64;
            for r in 1..m {
                let rf = r as f64;
                p *= (x + rf) / rf;
            }
            p
        } else {
            // x Γ(m+x) / (Γ(x+1) Γ(m+1))
            x * reciprocal_gamma(x + 1.0) * ln_gamma_ratio(m as f64 + 1.0, x - 1.0)?.exp()
        };
        acc += w * f;
    }
    Ok(acc)
}

/// h(i, j) for j = i..=big_j, read off as the coefficients of z^{j−1} in
/// z^i/((1−z)(−log(1−z))).
///
/// With −log(1−z) = z B(z), B(z) = Σ z^n/(n+1), the coefficients are partial
/// sums of the series 1/B, which is computed in exact rational arithmetic.
pub fn hitting_gf_coefficients(i: usize, big_j: usize) -> Result<Vec<f64>> {
    if i == 0 {
        return Err(CoalabError::Range("states start at 1".into()));
    }
    if big_j < i {
        return Err(CoalabError::Domain(format!("need J >= i, got J = {big_j}, i = {i}")));
    }
    let len = big_j - i + 1;
    let mut inv_b: Vec<ExactRational> = Vec::with_capacity(len);
    inv_b.push(ExactRational::one());
    for m in 1..len {
        let mut acc = ExactRational::zero();
        for k in 1..=m {
            acc += &inv_b[m - k] / int_rational(k as u64 + 1);
        }
        inv_b.push(-acc);
    }
    let mut partial = ExactRational::zero();
    Ok(inv_b
        .iter()
        .map(|c| {
            partial += c;
            rational_to_f64(&partial)
        })
        .collect())
}

/// 1/log j − γ/log² j.
pub fn hitting_asymptotic(j: u64) -> Result<f64> {
    if j <= 1 {
        return Err(CoalabError::Domain(format!("asymptotic form needs j >= 2, got {j}")));
    }
    Ok(hitting_asymptotic_at_log((j as f64).ln()))
}

/// The two-term asymptotic form as a function of `log j`.
pub fn hitting_asymptotic_at_log(log_j: f64) -> f64 {
    1.0 / log_j - EULER_GAMMA / (log_j * log_j)
}
