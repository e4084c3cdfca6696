use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use super::TimePoint;
use crate::combinatorics::{
    binomial, factorial, ln_gamma_ratio, rational_from_f64, rational_to_f64, ratio,
    reciprocal_gamma, sign_pow, stirling_first_ref, stirling_second_ref,
};
use crate::error::{CoalabError, Result};

/// Slack allowed outside [0, 1] before a probability is reported as
/// numerically unstable.
const PROBABILITY_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransitionFormula {
    /// (−1)^{i+j}(i!/j!) Σ_k S(k,i) e^{−tk} s(j,k)
    Stirling,
    /// (−1)^j Σ_k (−1)^k C(i,k) C(e^{−t}k, j)
    Binomial,
}

impl std::str::FromStr for TransitionFormula {
    type Err = CoalabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "stirling" => Ok(Self::Stirling),
            "binomial" => Ok(Self::Binomial),
            _ => Err(CoalabError::Domain(format!("unknown transition formula '{s}'"))),
        }
    }
}

/// E z^{L_t^{(i)}} = (1 − (1 − z)^{e^{−t}})^i for |z| < 1.
pub fn fixation_pgf(i: u32, tp: TimePoint, z: f64) -> Result<f64> {
    if !(z.abs() < 1.0) {
        return Err(CoalabError::Domain(format!("pgf argument must satisfy |z| < 1, got {z}")));
    }
    Ok((1.0 - (1.0 - z).powf(tp.alpha())).powi(i as i32))
}

/// p_ij(t) = P(L_t = j | L_0 = i).
///
/// Both alternating sums are evaluated exactly on the dyadic rational that
/// the double `e^{−t}` represents, then rounded once. This removes the
/// cancellation that limits naive floating-point evaluation; the Stirling
/// form is limited to `j` within the Stirling table size.
pub fn fixation_transition(i: usize, j: usize, tp: TimePoint, formula: TransitionFormula) -> Result<f64> {
    if i == 0 {
        return Err(CoalabError::Range("states start at 1".into()));
    }
    if j < i {
        return Ok(0.0);
    }
    let alpha = rational_from_f64(tp.alpha())?;
    // alpha = a / 2^e exactly
    let a = alpha.numer().clone();
    let pow2 = alpha.denom().clone();
    let value = match formula {
        TransitionFormula::Stirling => {
            let mut acc = BigInt::zero();
            let mut a_pow = BigInt::one();
            for _ in 0..i {
                a_pow *= &a;
            }
            let mut d_pow = num_traits::pow(pow2.clone(), j - i);
            for k in i..=j {
                let term = stirling_second_ref(k, i)? * stirling_first_ref(j, k)?;
                acc += term * &a_pow * &d_pow;
                a_pow *= &a;
                if k < j {
                    d_pow /= &pow2;
                }
            }
            let den = factorial(j) * num_traits::pow(pow2, j);
            ratio(sign_pow(i + j) * factorial(i) * acc, den)
        }
        TransitionFormula::Binomial => {
            let mut acc = BigInt::zero();
            for k in 1..=i {
                let ka = &a * BigInt::from(k);
                let mut prod = BigInt::one();
                let mut step = BigInt::zero();
                for _ in 0..j {
                    prod *= &ka - &step;
                    step += &pow2;
                }
                acc += sign_pow(k) * binomial(i, k) * prod;
            }
            let den = factorial(j) * num_traits::pow(pow2, j);
            ratio(sign_pow(j) * acc, den)
        }
    };
    let v = rational_to_f64(&value);
    if v < -PROBABILITY_SLACK || v > 1.0 + PROBABILITY_SLACK {
        return Err(CoalabError::NumericInstability(format!("p_{i},{j}(t) evaluated to {v}")));
    }
    Ok(v)
}

/// P(L_t = j) started from 1: αΓ(j−α)/(Γ(1−α)Γ(j+1)).
pub fn fixation_marginal(tp: TimePoint, j: u64) -> Result<f64> {
    if j == 0 {
        return Err(CoalabError::Range("states start at 1".into()));
    }
    let alpha = tp.alpha();
    if j == 1 {
        return Ok(alpha);
    }
    let jf = j as f64;
    Ok(alpha * reciprocal_gamma(1.0 - alpha) * ln_gamma_ratio(jf + 1.0, -1.0 - alpha)?.exp())
}

/// P(L_t ≥ j) started from 1: Γ(j−α)/(Γ(1−α)Γ(j)).
pub fn fixation_tail(tp: TimePoint, j: u64) -> Result<f64> {
    if j <= 1 {
        return Ok(1.0);
    }
    let alpha = tp.alpha();
    Ok(reciprocal_gamma(1.0 - alpha) * ln_gamma_ratio(j as f64, -alpha)?.exp())
}

/// E[1/((L_t+1)⋯(L_t+k))] = α/(k!(α+k)).
pub fn reciprocal_factorial_moment(tp: TimePoint, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(CoalabError::Range("k must be positive".into()));
    }
    let alpha = tp.alpha();
    let kfact: f64 = (1..=k).map(f64::from).product();
    Ok(alpha / (kfact * (alpha + f64::from(k))))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(t: f64) -> TimePoint {
        TimePoint::new(t).unwrap()
    }

    #[test]
    fn pgf_examples() {
        assert_eq!(fixation_pgf(3, tp(0.4), 0.0).unwrap(), 0.0);
        assert!((fixation_pgf(3, tp(0.0), 0.5).unwrap() - 0.125).abs() < 1e-15);
        let a = (-0.7f64).exp();
        assert!((fixation_pgf(1, tp(0.7), 0.3).unwrap() - (1.0 - 0.7f64.powf(a))).abs() < 1e-15);
        assert!(fixation_pgf(1, tp(0.7), 1.0).is_err());
    }

    #[test]
    fn transition_examples() {
        for f in [TransitionFormula::Stirling, TransitionFormula::Binomial] {
            for t in [0.1f64, 0.5, 1.0, 3.0] {
                let a = (-t).exp();
                let p11 = fixation_transition(1, 1, tp(t), f).unwrap();
                assert!((p11 - a).abs() < 1e-15);
                let p44 = fixation_transition(4, 4, tp(t), f).unwrap();
                assert!((p44 - (-4.0 * t).exp()).abs() < 1e-15);
                let p12 = fixation_transition(1, 2, tp(t), f).unwrap();
                assert!((p12 - a * (1.0 - a) / 2.0).abs() < 1e-15);
            }
            assert_eq!(fixation_transition(3, 2, tp(1.0), f).unwrap(), 0.0);
        }
    }

    #[test]
    fn marginal_matches_transition_and_examples() {
        let t = tp(0.8);
        let a = t.alpha();
        assert!((fixation_marginal(t, 1).unwrap() - a).abs() < 1e-16);
        assert!((fixation_marginal(t, 2).unwrap() - a * (1.0 - a) / 2.0).abs() < 1e-15);
        for j in 1..=40 {
            let m = fixation_marginal(t, j).unwrap();
            let p = fixation_transition(1, j as usize, t, TransitionFormula::Binomial).unwrap();
            assert!((m - p).abs() < 1e-14 * p.max(1e-300), "j={j}");
        }
    }

    #[test]
    fn marginal_at_time_zero_is_a_point_mass() {
        let t = tp(0.0);
        assert_eq!(fixation_marginal(t, 1).unwrap(), 1.0);
        assert_eq!(fixation_marginal(t, 5).unwrap(), 0.0);
    }

    #[test]
    fn tail_is_complement_of_partial_sums_and_pareto_like() {
        let t = tp(0.6);
        let mut cum = 0.0;
        for j in 1..200u64 {
            let tail = fixation_tail(t, j).unwrap();
            assert!((tail - (1.0 - cum)).abs() < 1e-13, "j={j}");
            cum += fixation_marginal(t, j).unwrap();
        }
        let a = t.alpha();
        let big = 1e8f64;
        let tail = fixation_tail(t, big as u64).unwrap();
        let pareto = reciprocal_gamma(1.0 - a) / big.powf(a);
        assert!((tail / pareto - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reciprocal_factorial_moments_match_series() {
        // Σ_j P(L_t = j)/((j+1)⋯(j+k)) with the pmf by its ratio recurrence;
        // the tail beyond J is below J^{-k-α}.
        for &t in &[0.3, 1.2] {
            let t = tp(t);
            let a = t.alpha();
            for k in 1..=3u32 {
                let mut p = a;
                let mut sum = 0.0;
                let big_j = 1_000_000u64;
                for j in 1..=big_j {
                    let jf = j as f64;
                    let denom: f64 = (1..=k).map(|r| jf + f64::from(r)).product();
                    sum += p / denom;
                    p *= (jf - a) / (jf + 1.0);
                }
                let exact = reciprocal_factorial_moment(t, k).unwrap();
                assert!((sum - exact).abs() < 1e-8, "k={k}: {sum} vs {exact}");
            }
        }
    }
}
