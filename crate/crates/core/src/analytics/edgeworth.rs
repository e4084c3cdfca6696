use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use super::absorption::gumbel_limit_cdf;
use crate::combinatorics::{binomial, gumbel_cumulant, stirling_second_ref};
use crate::error::{CoalabError, Result};

/// Largest supported expansion order; the coefficients stop being useful
/// well before this.
pub const EDGEWORTH_MAX_ORDER: usize = 12;

/// Taylor coefficients of 1/Γ(1−x) = Σ c_k x^k up to order K.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeworthCoeffs {
    #[serde(rename = "K")]
    pub order: usize,
    pub c: Vec<f64>,
}

fn check_order(k: usize) -> Result<()> {
    if k > EDGEWORTH_MAX_ORDER {
        return Err(CoalabError::Range(format!(
            "expansion order {k} exceeds the maximum {EDGEWORTH_MAX_ORDER}"
        )));
    }
    Ok(())
}

/// Moments m_0..m_K of the standard Gumbel law from its cumulants,
/// m_n = Σ_{k=1}^{n} C(n−1,k−1) κ_k m_{n−k}.
pub fn gumbel_moments(order: usize) -> Vec<f64> {
    let mut m = vec![1.0];
    for n in 1..=order {
        let v = (1..=n)
            .map(|k| binom_f64(n - 1, k - 1) * gumbel_cumulant(k as u32) * m[n - k])
            .sum();
        m.push(v);
    }
    m
}

fn binom_f64(n: usize, k: usize) -> f64 {
    binomial(n, k).to_f64().unwrap_or(f64::INFINITY)
}

/// a_k = m_k / k!, the coefficients of Γ(1−x).
fn gamma_series(order: usize) -> Vec<f64> {
    let mut fact = 1.0;
    gumbel_moments(order)
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            if k > 0 {
                fact *= k as f64;
            }
            m / fact
        })
        .collect()
}

/// c_k = Σ_j (−1)^j Σ over compositions of k into j parts of Π a_{part}.
pub fn edgeworth_c(order: usize) -> Result<EdgeworthCoeffs> {
    check_order(order)?;
    let a = gamma_series(order);
    // e[k] holds the composition sum with the current number of parts.
    let mut e = vec![0.0; order + 1];
    e[0] = 1.0;
    let mut c = vec![0.0; order + 1];
    c[0] = 1.0;
    for parts in 1..=order {
        let mut next = vec![0.0; order + 1];
        for k in parts..=order {
            next[k] = (1..=k - parts + 1).map(|p| a[p] * e[k - p]).sum();
        }
        e = next;
        let sign = if parts % 2 == 0 { 1.0 } else { -1.0 };
        for k in parts..=order {
            c[k] += sign * e[k];
        }
    }
    Ok(EdgeworthCoeffs { order, c })
}

/// The same coefficients by inverting the power series of Γ(1−x).
pub fn edgeworth_c_by_inversion(order: usize) -> Result<Vec<f64>> {
    check_order(order)?;
    let a = gamma_series(order);
    let mut c = vec![1.0];
    for k in 1..=order {
        c.push(-(1..=k).map(|m| a[m] * c[k - m]).sum::<f64>());
    }
    Ok(c)
}

/// d_ki(x) = Σ_{j=1}^{i} F^j (−1)^{j−1} C(i,j) j^k with F = e^{−e^{−x}}.
pub fn edgeworth_d(k: u32, i: u32, x: f64) -> f64 {
    let f = (-(-x).exp()).exp();
    (1..=i)
        .map(|j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            sign * binom_f64(i as usize, j as usize) * f64::from(j).powi(k as i32) * f.powi(j as i32)
        })
        .sum()
}

/// d_ki(x) = Σ_{j=1}^{k} S(k,j) (−1)^{j−1} (i)_j F^j (1−F)^{i−j}.
pub fn edgeworth_d_stirling(k: u32, i: u32, x: f64) -> Result<f64> {
    if k == 0 {
        return Ok(gumbel_limit_cdf(i, x));
    }
    let f = (-(-x).exp()).exp();
    let survival = -(-(-x).exp()).exp_m1();
    let mut acc = 0.0;
    let mut falling = 1.0;
    for j in 1..=k.min(i) {
        falling *= f64::from(i - j + 1);
        let s = stirling_second_ref(k as usize, j as usize)?.to_f64().unwrap_or(f64::INFINITY);
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        acc += sign * s * falling * f.powi(j as i32) * survival.powi((i - j) as i32);
    }
    Ok(acc)
}

/// Σ_{k=0}^{K} c_k d_ki(x) e^{−kx} / log^k n, approximating
/// P(τ_{n,i} ≤ x + log log n).
pub fn edgeworth_cdf(n: u64, i: u32, x: f64, order: usize) -> Result<f64> {
    if n < 3 {
        return Err(CoalabError::Domain(format!("Edgeworth expansion needs n >= 3, got {n}")));
    }
    let coeffs = edgeworth_c(order)?;
    let log_n = (n as f64).ln();
    let scale = (-x).exp() / log_n;
    let mut acc = gumbel_limit_cdf(i, x);
    let mut weight = 1.0;
    for k in 1..=order {
        weight *= scale;
        acc += coeffs.c[k] * edgeworth_d(k as u32, i, x) * weight;
    }
    Ok(acc)
}
