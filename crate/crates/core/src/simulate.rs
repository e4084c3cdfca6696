//! Exact (Gillespie) simulation of the block counting process and the
//! fixation line, and Monte Carlo estimators built on it.

use num_bigint::BigInt;
use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytics::TimePoint;
use crate::combinatorics::{ratio, ExactRational};
use crate::error::{CoalabError, Result};
use crate::rng::{open_unit, substream, SimRng};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Process {
    Block,
    Fixation,
}

impl std::str::FromStr for Process {
    type Err = CoalabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block" => Ok(Process::Block),
            "fixation" => Ok(Process::Fixation),
            _ => Err(CoalabError::Domain(format!("unknown process '{s}'"))),
        }
    }
}

/// A simulated trajectory: `states[0] = n` and `states[k]` is entered at
/// `jump_times[k - 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSample {
    pub process: Process,
    pub n: u64,
    pub jump_times: Vec<f64>,
    pub states: Vec<u64>,
    /// Fixation paths only: the walk left the state cap.
    pub exceeded_cap: bool,
}

impl PathSample {
    fn start(process: Process, n: u64) -> Self {
        Self { process, n, jump_times: Vec::new(), states: vec![n], exceeded_cap: false }
    }

    /// State at time `t` (right-continuous).
    pub fn state_at(&self, t: f64) -> u64 {
        let k = self.jump_times.partition_point(|&s| s <= t);
        self.states[k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub reps: u64,
    /// Worker threads; 0 uses rayon's default.
    pub threads: usize,
}

impl SimConfig {
    pub fn new(seed: u64, reps: u64) -> Self {
        Self { seed, reps, threads: 0 }
    }

    /// Runs `f(rng, index)` for every replicate on its own substream and
    /// returns the results in replicate order.
    pub fn run<T, F>(&self, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(&mut SimRng, u64) -> Result<T> + Sync,
    {
        if self.reps == 0 {
            return Err(CoalabError::Domain("reps must be positive".into()));
        }
        let work = || {
            (0..self.reps)
                .into_par_iter()
                .map(|r| f(&mut substream(self.seed, r), r))
                .collect::<Result<Vec<T>>>()
        };
        if self.threads == 0 {
            work()
        } else {
            rayon::ThreadPoolBuilder::new()
                .num_threads(self.threads)
                .build()
                .map_err(|e| CoalabError::Domain(format!("thread pool: {e}")))?
                .install(work)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub reps: u64,
}

impl EstimateWithError {
    pub fn from_samples(v: &[f64]) -> Self {
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = if v.len() > 1 { v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Self { value: mean, std_error: (var / n).sqrt(), reps: v.len() as u64 }
    }

    pub fn from_indicators(hits: &[bool]) -> Self {
        let v: Vec<f64> = hits.iter().map(|&h| if h { 1.0 } else { 0.0 }).collect();
        Self::from_samples(&v)
    }

    /// |value − target| ≤ k standard errors.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.std_error
    }
}

/// P(decrement = m) from block state i ≥ 2, as an exact rational.
pub fn block_decrement_pmf(i: u64, m: u64) -> ExactRational {
    let big = |v: u64| BigInt::from(v);
    if i < 2 || m == 0 || m >= i {
        return ratio(big(0), big(1));
    }
    if m == i - 1 {
        return ratio(big(1), big((i - 1) * (i - 1)));
    }
    ratio(big(i), big((i - 1) * m * (m + 1)))
}

/// Inverse transform for the decrement. The cumulative law is
/// C(m) = i m / ((i−1)(m+1)) for m ≤ i−2 and the remaining mass sits on i−1.
pub fn sample_block_decrement<R: Rng + ?Sized>(i: u64, rng: &mut R) -> u64 {
    if i == 2 {
        return 1;
    }
    let u = open_unit(rng);
    let s = u * (i - 1) as f64;
    let m = (s / (i as f64 - s)).ceil().max(1.0);
    if m > (i - 2) as f64 {
        i - 1
    } else {
        m as u64
    }
}

/// η = ⌊1/U⌋ with U uniform on (0, 1] has P(η = m) = 1/(m(m+1)).
pub fn sample_increment<R: Rng + ?Sized>(rng: &mut R) -> u64 {
    let u = 1.0 - rng.random::<f64>();
    let v = (1.0 / u).floor();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v as u64
    }
}

fn exp_time<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let e: f64 = Exp1.sample(rng);
    e / rate
}

/// Block counting path from n up to `horizon` (or absorption at 1).
pub fn simulate_block<R: Rng + ?Sized>(n: u64, horizon: f64, rng: &mut R) -> Result<PathSample> {
    if n == 0 {
        return Err(CoalabError::Range("initial state must be >= 1".into()));
    }
    let mut path = PathSample::start(Process::Block, n);
    let mut state = n;
    let mut time = 0.0;
    while state > 1 {
        time += exp_time((state - 1) as f64, rng);
        if time > horizon {
            break;
        }
        state -= sample_block_decrement(state, rng);
        path.jump_times.push(time);
        path.states.push(state);
    }
    Ok(path)
}

/// Fixation line path from n, stopped at `horizon` or once the state
/// exceeds `state_cap`.
pub fn simulate_fixation<R: Rng + ?Sized>(n: u64, horizon: f64, state_cap: u64, rng: &mut R) -> Result<PathSample> {
    if n == 0 {
        return Err(CoalabError::Range("initial state must be >= 1".into()));
    }
    if state_cap <= n {
        return Err(CoalabError::Domain(format!("state cap {state_cap} must exceed n = {n}")));
    }
    let mut path = PathSample::start(Process::Fixation, n);
    let mut state = n;
    let mut time = 0.0;
    loop {
        time += exp_time(state as f64, rng);
        if time > horizon {
            break;
        }
        state = state.saturating_add(sample_increment(rng));
        path.jump_times.push(time);
        path.states.push(state);
        if state > state_cap {
            path.exceeded_cap = true;
            break;
        }
    }
    Ok(path)
}

/// N_t^{(n)} without storing the path.
pub fn block_state_at<R: Rng + ?Sized>(n: u64, t: f64, rng: &mut R) -> u64 {
    let mut state = n;
    let mut time = 0.0;
    while state > 1 {
        time += exp_time((state - 1) as f64, rng);
        if time > t {
            break;
        }
        state -= sample_block_decrement(state, rng);
    }
    state
}

/// L_t^{(n)} without storing the path; `None` once the state exceeds the cap.
pub fn fixation_state_at<R: Rng + ?Sized>(n: u64, t: f64, state_cap: u64, rng: &mut R) -> Option<u64> {
    let mut state = n;
    let mut time = 0.0;
    loop {
        time += exp_time(state as f64, rng);
        if time > t {
            return Some(state);
        }
        state = state.saturating_add(sample_increment(rng));
        if state > state_cap {
            return None;
        }
    }
}

/// One Sibuya(α) draw, the law of L_t^{(1)}: P(X > k) = Π_{m≤k}(1 − α/m).
/// Mixed geometric: given V ~ Beta(α, 1−α), P(X > k | V) = (1−V)^k.
pub fn sample_sibuya<R: Rng + ?Sized>(beta: &Beta<f64>, rng: &mut R) -> u64 {
    let v = beta.sample(rng);
    let q = (-v).ln_1p();
    if q == 0.0 {
        return u64::MAX;
    }
    let k = open_unit(rng).ln() / q;
    if k >= (u64::MAX - 1) as f64 {
        u64::MAX
    } else {
        1 + k.floor() as u64
    }
}

/// Fraction of jump-chain walks from i that land exactly on j.
pub fn estimate_hitting(i: u64, j: u64, cfg: &SimConfig) -> Result<EstimateWithError> {
    if i == 0 {
        return Err(CoalabError::Range("states start at 1".into()));
    }
    if j < i {
        return Err(CoalabError::Domain(format!("need i <= j, got ({i}, {j})")));
    }
    if i == j {
        return Ok(EstimateWithError { value: 1.0, std_error: 0.0, reps: cfg.reps });
    }
    let hits = cfg.run(|rng, _| {
        let mut s = i;
        while s < j {
            s = s.saturating_add(sample_increment(rng));
        }
        Ok(s == j)
    })?;
    Ok(EstimateWithError::from_indicators(&hits))
}

/// Monte Carlo estimate of P(N_t^{(n)} ≤ i) = P(τ_{n,i} ≤ t).
pub fn estimate_absorption(n: u64, i: u64, t: f64, cfg: &SimConfig) -> Result<EstimateWithError> {
    if n == 0 || i == 0 {
        return Err(CoalabError::Range("states start at 1".into()));
    }
    let hits = cfg.run(|rng, _| Ok(block_state_at(n, t, rng) <= i))?;
    Ok(EstimateWithError::from_indicators(&hits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FixationMethod {
    /// Sum of n independent copies of L_t^{(1)} (branching property).
    Branching,
    /// Gillespie paths from n with a doubling state cap.
    Path,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleDiagnostics {
    pub cap_doublings: u64,
    pub rejected_draws: u64,
    pub initial_cap: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledSample {
    pub process: Process,
    pub n: u64,
    pub t: f64,
    pub values: Vec<f64>,
    pub diagnostics: SampleDiagnostics,
}

/// Default state cap for fixation paths: n^{e^t}·10³.
pub fn default_state_cap(n: u64, t: f64) -> u64 {
    let cap = (n as f64).powf(t.exp()) * 1e3;
    if cap >= u64::MAX as f64 / 2.0 {
        u64::MAX / 2
    } else {
        (cap as u64).max(n + 1)
    }
}

/// Draws of X_t^{(n)} = N_t^{(n)}/n^{e^{−t}} or Y_t^{(n)} = L_t^{(n)}/n^{e^t}.
pub fn scaled_marginal_sample(
    process: Process,
    n: u64,
    t: f64,
    cfg: &SimConfig,
    method: FixationMethod,
) -> Result<ScaledSample> {
    if n < 2 {
        return Err(CoalabError::Domain(format!("need n >= 2, got {n}")));
    }
    let tp = TimePoint::new(t)?;
    let nf = n as f64;
    let mut diagnostics = SampleDiagnostics::default();
    let values = match process {
        Process::Block => {
            let scale = nf.powf(tp.alpha());
            cfg.run(|rng, _| Ok(block_state_at(n, t, rng) as f64 / scale))?
        }
        Process::Fixation => {
            let scale = nf.powf(t.exp());
            match method {
                FixationMethod::Branching => {
                    let alpha = tp.alpha();
                    if alpha >= 1.0 {
                        vec![nf / scale; cfg.reps as usize]
                    } else {
                        let beta = Beta::new(alpha, 1.0 - alpha)
                            .map_err(|e| CoalabError::Domain(format!("beta law: {e}")))?;
                        cfg.run(|rng, _| {
                            let mut total = 0f64;
                            for _ in 0..n {
                                total += sample_sibuya(&beta, rng) as f64;
                            }
                            Ok(total / scale)
                        })?
                    }
                }
                FixationMethod::Path => {
                    let cap0 = default_state_cap(n, t);
                    diagnostics.initial_cap = Some(cap0);
                    let draws = cfg.run(|_, r| {
                        let mut cap = cap0;
                        let mut doublings = 0u64;
                        loop {
                            let mut rng = substream(cfg.seed, r);
                            if let Some(s) = fixation_state_at(n, t, cap, &mut rng) {
                                return Ok((s as f64 / scale, doublings));
                            }
                            if cap >= u64::MAX / 2 {
                                return Err(CoalabError::NumericInstability(
                                    "fixation path exceeded every representable state cap".into(),
                                ));
                            }
                            cap = cap.saturating_mul(2);
                            doublings += 1;
                        }
                    })?;
                    diagnostics.cap_doublings = draws.iter().map(|d| d.1).sum();
                    diagnostics.rejected_draws = draws.iter().filter(|d| d.1 > 0).count() as u64;
                    draws.into_iter().map(|d| d.0).collect()
                }
            }
        }
    };
    Ok(ScaledSample { process, n, t, values, diagnostics })
}

/// sup_x |F_n(x) − F(x)| for the empirical CDF of `samples`, checked at each
/// distinct sample value and just below it.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(CoalabError::Domain("ks_distance needs at least one sample".into()));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    let mut k = 0;
    while k < s.len() {
        let v = s[k];
        let mut end = k;
        while end < s.len() && s[end] == v {
            end += 1;
        }
        let below = k as f64 / n;
        let at = end as f64 / n;
        d = d.max((at - cdf(v)).abs()).max((below - cdf(v.next_down())).abs());
        k = end;
    }
    Ok(d)
}

/// Empirical CDF of a reference sample, for use as the `cdf` of
/// [`ks_distance`].
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(mut values: Vec<f64>) -> Self {
        values.sort_by(f64::total_cmp);
        Self { sorted: values }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}
