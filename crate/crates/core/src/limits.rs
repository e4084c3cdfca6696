//! Limit laws of the scaled processes: Mittag–Leffler marginals of the
//! block counting process, stable marginals of Neveu's branching process,
//! and identities linking them.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::analytics::TimePoint;
use crate::combinatorics::{gumbel_cumulant, log_gamma};
use crate::error::{CoalabError, Result};
use crate::rng::open_unit;

/// E X_t^m = Γ(1+m)/Γ(1+mα).
pub fn ml_moment(tp: TimePoint, m: f64) -> Result<f64> {
    if !(m >= 0.0) {
        return Err(CoalabError::Domain(format!("moment order must be >= 0, got {m}")));
    }
    Ok((log_gamma(1.0 + m)? - log_gamma(1.0 + m * tp.alpha())?).exp())
}

/// One draw of the positive α-stable law with E e^{−λS} = e^{−λ^α}
/// (Kanter's representation). α = 1 is the point mass at 1.
pub fn sample_neveu<R: Rng + ?Sized>(tp: TimePoint, rng: &mut R) -> f64 {
    let alpha = tp.alpha();
    if alpha >= 1.0 {
        return 1.0;
    }
    let theta = PI * open_unit(rng);
    let e: f64 = Exp1.sample(rng);
    let sa = (alpha * theta).sin();
    let s1a = ((1.0 - alpha) * theta).sin();
    let s = theta.sin();
    // (sin αθ / sin θ)^{1/α} · (sin((1−α)θ) / (E sin αθ))^{(1−α)/α}
    let log_s = (sa.ln() - s.ln()) / alpha + (1.0 - alpha) / alpha * (s1a.ln() - e.ln() - sa.ln());
    log_s.exp()
}

/// One Mittag–Leffler draw with parameter α, obtained as S^{−α}.
pub fn sample_mittag_leffler<R: Rng + ?Sized>(tp: TimePoint, rng: &mut R) -> f64 {
    if tp.alpha() >= 1.0 {
        return 1.0;
    }
    sample_neveu(tp, rng).powf(-tp.alpha())
}

/// Joint Laplace transform ψ_k(λ_1..λ_k) = E exp(−Σ λ_j Y_{t_j}) of Neveu's
/// process started at 1.
pub fn neveu_laplace_fd(times: &[f64], lambdas: &[f64]) -> Result<f64> {
    if times.is_empty() || times.len() != lambdas.len() {
        return Err(CoalabError::Domain("need equally many times and lambdas, at least one".into()));
    }
    if times.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(CoalabError::Domain("times must be strictly increasing".into()));
    }
    if lambdas.iter().any(|&l| !(l >= 0.0)) {
        return Err(CoalabError::Domain("lambdas must be >= 0".into()));
    }
    let alphas: Vec<f64> = times
        .iter()
        .map(|&t| TimePoint::new(t).map(|tp| tp.alpha()))
        .collect::<Result<_>>()?;
    let mut carry = lambdas[lambdas.len() - 1];
    for k in (1..times.len()).rev() {
        carry = lambdas[k - 1] + carry.powf(alphas[k] / alphas[k - 1]);
    }
    Ok((-carry.powf(alphas[0])).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogProcess {
    /// X̃_t = log X_t
    XTilde,
    /// Ỹ_t = log Y_t
    YTilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogMarginalSpec {
    pub which: LogProcess,
    pub t: f64,
}

/// j-th cumulant of the log of the limiting marginal.
pub fn log_cumulant(spec: LogMarginalSpec, j: u32) -> Result<f64> {
    if j == 0 {
        return Err(CoalabError::Range("cumulant order starts at 1".into()));
    }
    let jt = f64::from(j) * spec.t;
    let k = gumbel_cumulant(j);
    Ok(match spec.which {
        LogProcess::YTilde => jt.exp_m1() * k,
        LogProcess::XTilde => {
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * -(-jt).exp_m1() * k
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DualityGap {
    pub gap: f64,
    pub std_error: f64,
    /// Estimate of P(X_t ≤ y | X_0 = x).
    pub p_block: f64,
    /// Estimate of P(Y_t ≥ x | Y_0 = y).
    pub p_fixation: f64,
    pub reps: u64,
}

/// Monte Carlo estimate of P(x^α X_t ≤ y) − P(y^{e^t} Y_t ≥ x).
///
/// Both probabilities are estimated from separate draws. Feeding both from
/// the same stable draw S with X = S^{−α} makes the two events identical.
pub fn siegmund_duality_gap<R: Rng + ?Sized>(x: f64, y: f64, t: f64, reps: u64, rng: &mut R) -> Result<DualityGap> {
    if !(x >= 0.0 && y >= 0.0) {
        return Err(CoalabError::Domain("x and y must be >= 0".into()));
    }
    if !(t > 0.0) {
        return Err(CoalabError::Domain(format!("t must be > 0, got {t}")));
    }
    if reps < 1000 {
        return Err(CoalabError::Domain(format!("need at least 1000 replicates, got {reps}")));
    }
    if x == 0.0 {
        return Ok(DualityGap { gap: 0.0, std_error: 0.0, p_block: 1.0, p_fixation: 1.0, reps });
    }
    let tp = TimePoint::new(t)?;
    let alpha = tp.alpha();
    let x_scale = x.powf(alpha);
    let y_scale = y.powf(t.exp());
    let mut hits_block = 0u64;
    let mut hits_fix = 0u64;
    for _ in 0..reps {
        if x_scale * sample_mittag_leffler(tp, rng) <= y {
            hits_block += 1;
        }
        if y_scale * sample_neveu(tp, rng) >= x {
            hits_fix += 1;
        }
    }
    let n = reps as f64;
    let p1 = hits_block as f64 / n;
    let p2 = hits_fix as f64 / n;
    let var = p1 * (1.0 - p1) / (n - 1.0) + p2 * (1.0 - p2) / (n - 1.0);
    Ok(DualityGap { gap: p1 - p2, std_error: var.sqrt(), p_block: p1, p_fixation: p2, reps })
}

/// (1 − e^{−x})^α ≥ 1 − e^{−x^α}, up to 1e−12.
pub fn check_pow_inequality(x: f64, alpha: f64) -> Result<bool> {
    if !(x >= 0.0) || !(0.0..=1.0).contains(&alpha) {
        return Err(CoalabError::Domain(format!("need x >= 0 and alpha in [0,1], got ({x}, {alpha})")));
    }
    let lhs = (-(-x).exp_m1()).powf(alpha);
    let rhs = -(-x.powf(alpha)).exp_m1();
    Ok(lhs >= rhs - 1e-12)
}
