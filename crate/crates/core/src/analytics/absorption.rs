use num_traits::ToPrimitive;

use super::TimePoint;
use crate::combinatorics::{binomial, general_binomial, ln_gamma_ratio, reciprocal_gamma};
use crate::error::{CoalabError, Result};

const CDF_SLACK: f64 = 1e-9;

/// Up to this n the factor Γ(n−z)/(Γ(n)Γ(1−z)) is the finite product
/// Π_{m=1}^{n−1} (1 − z/m).
const PRODUCT_MAX_N: u64 = 64;

fn signed_binomial_f64(i: u64, k: u64) -> f64 {
    let b = binomial(i as usize, k as usize).to_f64().unwrap_or(f64::INFINITY);
    if k % 2 == 0 {
        b
    } else {
        -b
    }
}

fn validate(n: u64, i: u64) -> Result<()> {
    if i == 0 || n == 0 {
        return Err(CoalabError::Range("states start at 1".into()));
    }
    if i > n {
        return Err(CoalabError::Domain(format!("need i <= n, got i = {i}, n = {n}")));
    }
    Ok(())
}

/// P(N_t^{(n)} ≤ i) computed on the dual side as P(L_t^{(i)} ≥ n):
/// Σ_{k=1}^{i} (−1)^k C(i,k) (−1)^n C(e^{−t}k − 1, n − 1).
pub fn block_tail_via_duality(n: u64, i: u64, tp: TimePoint) -> Result<f64> {
    validate(n, i)?;
    let sign_n = if n % 2 == 0 { 1.0 } else { -1.0 };
    let alpha = tp.alpha();
    Ok((1..=i)
        .map(|k| signed_binomial_f64(i, k) * sign_n * general_binomial(alpha * k as f64 - 1.0, n - 1))
        .sum())
}

/// Γ(n − z) / (Γ(n) Γ(1 − z)), which equals (−1)^{n−1} C(z − 1, n − 1).
fn gamma_ratio_factor(n: u64, z: f64) -> Result<f64> {
    if n <= PRODUCT_MAX_N {
        return Ok((1..n).map(|m| 1.0 - z / m as f64).product());
    }
    let nf = n as f64;
    let rg = reciprocal_gamma(1.0 - z);
    if rg == 0.0 {
        return Ok(0.0);
    }
    Ok(ln_gamma_ratio(nf, -z)?.exp() * rg)
}

/// P(τ_{n,i} ≤ t), the law of the first time the block counting process
/// started at n reaches a state ≤ i.
pub fn absorption_cdf(n: u64, i: u64, t: f64) -> Result<f64> {
    validate(n, i)?;
    if !(t > 0.0) {
        return Err(CoalabError::Domain(format!("absorption_cdf needs t > 0, got {t}")));
    }
    if n == 1 {
        return Ok(1.0);
    }
    let alpha = (-t).exp();
    let mut acc = 0.0;
    for j in 1..=i {
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        let c = binomial(i as usize, j as usize).to_f64().unwrap_or(f64::INFINITY);
        acc += sign * c * gamma_ratio_factor(n, j as f64 * alpha)?;
    }
    if !(-CDF_SLACK..=1.0 + CDF_SLACK).contains(&acc) {
        return Err(CoalabError::NumericInstability(format!(
            "P(tau_{n},{i} <= {t}) evaluated to {acc}"
        )));
    }
    Ok(acc.clamp(0.0, 1.0))
}

/// Standard Gumbel distribution function e^{−e^{−x}}.
pub fn gumbel_cdf(x: f64) -> f64 {
    (-(-x).exp()).exp()
}

/// F_i(x) = 1 − (1 − F(x))^i, the law of the minimum of i standard Gumbels.
pub fn gumbel_limit_cdf(i: u32, x: f64) -> f64 {
    let survival = -(-(-x).exp()).exp_m1();
    1.0 - survival.powi(i as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duality_tail_examples() {
        let t = TimePoint::new(0.9).unwrap();
        assert!((block_tail_via_duality(5, 5, t).unwrap() - 1.0).abs() < 1e-14);
        assert!((block_tail_via_duality(1, 1, t).unwrap() - 1.0).abs() < 1e-15);
        assert!((block_tail_via_duality(2, 1, t).unwrap() - (1.0 - (-0.9f64).exp())).abs() < 1e-15);
        assert!(matches!(block_tail_via_duality(2, 3, t), Err(CoalabError::Domain(_))));
    }

    #[test]
    fn absorption_examples() {
        for &t in &[0.1f64, 0.5, 1.0, 2.0, 7.0] {
            let a = (-t).exp();
            assert_eq!(absorption_cdf(1, 1, t).unwrap(), 1.0);
            assert!((absorption_cdf(2, 1, t).unwrap() - (1.0 - a)).abs() < 1e-15);
            let three = (1.0 - a) * (2.0 - a) / 2.0;
            assert!((absorption_cdf(3, 1, t).unwrap() - three).abs() < 1e-15);
        }
        assert!(absorption_cdf(3, 1, 0.0).is_err());
        assert!(absorption_cdf(3, 4, 1.0).is_err());
    }

    #[test]
    fn gamma_route_matches_binomial_route() {
        for &n in &[2u64, 10, 64, 65, 300, 5000] {
            for i in 1..=4u64.min(n) {
                for &t in &[0.3, 1.0, 2.5] {
                    let a = absorption_cdf(n, i, t).unwrap();
                    let b = block_tail_via_duality(n, i, TimePoint::new(t).unwrap()).unwrap();
                    assert!((a - b).abs() < 1e-11, "n={n} i={i} t={t}: {a} vs {b}");
                }
            }
        }
    }

    #[test]
    fn pole_terms_vanish() {
        // j·α = 1 exactly makes 1/Γ(1 − jα) vanish; the product route sees a
        // zero factor at m = 1.
        let t = 2f64.ln();
        for n in [10u64, 100] {
            let v = absorption_cdf(n, 2, t).unwrap();
            let w = block_tail_via_duality(n, 2, TimePoint::new(t).unwrap()).unwrap();
            assert!((v - w).abs() < 1e-12);
        }
    }

    #[test]
    fn gumbel_examples() {
        for &x in &[-2.0, 0.0, 1.5] {
            assert!((gumbel_limit_cdf(1, x) - gumbel_cdf(x)).abs() < 1e-15);
        }
        assert_eq!(gumbel_limit_cdf(3, f64::INFINITY), 1.0);
        assert_eq!(gumbel_limit_cdf(3, f64::NEG_INFINITY), 0.0);
    }
}
