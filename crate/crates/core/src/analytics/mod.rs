//! Closed-form functionals of the fixation line and the block counting
//! process: transition probabilities, hitting probabilities, absorption
//! times with their Gumbel limit, and Edgeworth corrections.

mod absorption;
mod edgeworth;
mod hitting;
mod transition;

pub use absorption::{absorption_cdf, block_tail_via_duality, gumbel_cdf, gumbel_limit_cdf};
pub use edgeworth::{
    edgeworth_c, edgeworth_c_by_inversion, edgeworth_cdf, edgeworth_d, edgeworth_d_stirling,
    gumbel_moments, EdgeworthCoeffs, EDGEWORTH_MAX_ORDER,
};
pub use hitting::{
    hitting_asymptotic, hitting_asymptotic_at_log, hitting_gf_coefficients, hitting_probability,
    hitting_renewal_f64, HittingMethod, HittingValue,
};
pub use transition::{
    fixation_marginal, fixation_pgf, fixation_tail, fixation_transition,
    reciprocal_factorial_moment, TransitionFormula,
};

use serde::{Deserialize, Serialize};

use crate::error::{CoalabError, Result};

/// A coalescent time `t ≥ 0` together with `alpha = e^{-t}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimePoint {
    t: f64,
    alpha: f64,
}

impl TimePoint {
    pub fn new(t: f64) -> Result<Self> {
        if !(t >= 0.0) || !t.is_finite() {
            return Err(CoalabError::Domain(format!("time must be finite and >= 0, got {t}")));
        }
        Ok(Self { t, alpha: (-t).exp() })
    }

    /// The time point whose `e^{-t}` equals `alpha`, for `alpha` in (0, 1].
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(CoalabError::Domain(format!("alpha must lie in (0, 1], got {alpha}")));
        }
        Ok(Self { t: -alpha.ln(), alpha })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}
