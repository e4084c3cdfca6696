//! Command-line front end.
//!
//! Every subcommand writes CSV (header row, comma separated, LF) or JSON to
//! standard output. Exact rationals are written as "num/den" strings and
//! reals in shortest round-trip form. Exit status is 0 on success, 2 on a
//! usage or domain error and 1 on a numeric failure.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analytics::{
    absorption_cdf, block_tail_via_duality, edgeworth_c, edgeworth_c_by_inversion, edgeworth_cdf,
    fixation_transition, gumbel_limit_cdf, hitting_asymptotic, hitting_probability, HittingMethod,
    HittingValue, TimePoint, TransitionFormula,
};
use crate::error::{CoalabError, Result};
use crate::limits::{
    check_pow_inequality, log_cumulant, ml_moment, neveu_laplace_fd, sample_mittag_leffler,
    sample_neveu, siegmund_duality_gap, LogMarginalSpec, LogProcess,
};
use crate::rng::substream;
use crate::simulate::{
    default_state_cap, estimate_absorption, estimate_hitting, ks_distance, scaled_marginal_sample,
    simulate_block, simulate_fixation, EmpiricalCdf, FixationMethod, Process, SampleDiagnostics,
    SimConfig,
};
use crate::spectral::{
    build_generator, closed_form_decomposition, rational_string, recursive_decomposition,
    verify_decomposition, GeneratorKind,
};

/// Stream id reserved for the reference sample of `converge`; replicate
/// streams count up from 0.
const REFERENCE_STREAM: u64 = u64::MAX;

#[derive(Debug, Parser)]
#[command(
    name = "coalab",
    version,
    about = "Exact finite-n analytics and Monte Carlo limit checks for the Bolthausen-Sznitman \
             block counting process N and fixation line L"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputOpts {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, Args)]
pub struct SimOpts {
    #[arg(long, default_value_t = 10_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (0 = all cores); output does not depend on it.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Write run diagnostics as JSON to this file.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
}

impl SimOpts {
    fn config(&self) -> SimConfig {
        SimConfig { seed: self.seed, reps: self.reps, threads: self.threads }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Exact spectral decomposition G = R·diag(D)·L of a triangular generator.
    ///
    /// bs-fixation: r_ij = (i!/j!)(−1)^{i+j} S(j,i), l_ij = (i!/j!)(−1)^{i+j} s(j,i), D = −i.
    /// bs-block: r_ij = ((j−1)!/(i−1)!)|s(i,j)|, l_ij = (−1)^{i+j}((j−1)!/(i−1)!) S(i,j), D = 1−i.
    /// kingman-fixation: D = −i(i+1)/2.
    Spectral(SpectralArgs),
    /// Fixation-line transition probability p_ij(t) = P(L_t = j | L_0 = i).
    ///
    /// stirling: (−1)^{i+j}(i!/j!) Σ_k S(k,i) e^{−tk} s(j,k).
    /// binomial: (−1)^j Σ_k (−1)^k C(i,k) C(e^{−t}k, j).
    Transition(TransitionArgs),
    /// Probability h(i,j) that the fixation line started at i visits j.
    ///
    /// stirling-shift: (−1)^{j−i}/(j−i)! Σ_{k=1}^{j−i+1} s(j−i+1,k)/k;
    /// integral: (1/m!)∫_0^1 Γ(m+x)/Γ(x) dx with m = j−i;
    /// gf-series: [z^{j−1}] z^i/((1−z)(−log(1−z)));
    /// asymptotic: 1/log j − γ/log² j.
    Hitting(HittingArgs),
    /// Absorption-time law P(τ_{n,i} ≤ t) = Σ_j (−1)^{j−1} C(i,j) Γ(n−je^{−t})/(Γ(n)Γ(1−je^{−t})).
    ///
    /// With --x the time is t = x + log log n and the Gumbel limit 1 − (1 − e^{−e^{−x}})^i is reported.
    Absorption(AbsorptionArgs),
    /// Edgeworth expansion Σ_{k≤K} c_k d_ki(x) e^{−kx}/log^k n of P(τ_{n,i} ≤ x + log log n),
    /// where 1/Γ(1−x) = Σ c_k x^k; without --x, prints the coefficients c_k.
    Edgeworth(EdgeworthArgs),
    /// Limit laws: Mittag–Leffler moments Γ(1+m)/Γ(1+me^{−t}), Neveu Laplace transforms
    /// exp(−λ^{e^{−t}}), log-cumulants, Siegmund duality and samplers.
    #[command(subcommand)]
    Limits(LimitsCommand),
    /// Gillespie simulation of N and L and Monte Carlo estimators.
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// KS distance of X_t^(n) = N_t/n^{e^{−t}} (or Y_t^(n) = L_t/n^{e^t}) to its limit law over
    /// an n-grid; the limit law is a reference sample of --ref-reps draws.
    Converge(ConvergeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SpectralMethod {
    ClosedForm,
    Recursive,
}

#[derive(Debug, Args)]
pub struct SpectralArgs {
    /// bs-block, bs-fixation or kingman-fixation
    #[arg(long)]
    pub kind: GeneratorKind,
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_enum, default_value_t = SpectralMethod::ClosedForm)]
    pub method: SpectralMethod,
    /// Check R·L = I and R·D·L = G exactly instead of printing R, D, L.
    #[arg(long)]
    pub verify: bool,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct TransitionArgs {
    #[arg(long)]
    pub i: usize,
    /// Target state; without it the row j = i..=trunc is printed.
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long)]
    pub t: f64,
    /// stirling or binomial
    #[arg(long, default_value = "binomial")]
    pub method: TransitionFormula,
    /// Last state of the printed row (default i + 20).
    #[arg(long)]
    pub trunc: Option<usize>,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HittingArg {
    Convolution,
    StirlingDouble,
    StirlingShift,
    Integral,
    GfSeries,
    Asymptotic,
}

impl HittingArg {
    fn method(self) -> Option<HittingMethod> {
        Some(match self {
            HittingArg::Convolution => HittingMethod::Convolution,
            HittingArg::StirlingDouble => HittingMethod::StirlingDouble,
            HittingArg::StirlingShift => HittingMethod::StirlingShift,
            HittingArg::Integral => HittingMethod::Integral,
            HittingArg::GfSeries => HittingMethod::GfSeries,
            HittingArg::Asymptotic => return None,
        })
    }

    fn name(self) -> &'static str {
        match self.method() {
            Some(m) => m.name(),
            None => "asymptotic",
        }
    }
}

#[derive(Debug, Args)]
pub struct HittingArgs {
    #[arg(long, default_value_t = 1)]
    pub i: usize,
    #[arg(long)]
    pub j: usize,
    #[arg(long, value_enum, default_value_t = HittingArg::StirlingShift)]
    pub method: HittingArg,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AbsorptionMethod {
    /// Γ-ratio form.
    Gamma,
    /// Dual form P(L_t^{(i)} ≥ n) via generalized binomials.
    Duality,
}

#[derive(Debug, Args)]
pub struct AbsorptionArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub i: u64,
    #[arg(long, required_unless_present = "x", conflicts_with = "x")]
    pub t: Option<f64>,
    #[arg(long)]
    pub x: Option<f64>,
    #[arg(long, value_enum, default_value_t = AbsorptionMethod::Gamma)]
    pub method: AbsorptionMethod,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Args)]
pub struct EdgeworthArgs {
    #[arg(long, requires = "x")]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub i: u32,
    #[arg(long, requires = "n", allow_negative_numbers = true)]
    pub x: Option<f64>,
    /// Expansion order (at most 12).
    #[arg(long = "K", default_value_t = 2)]
    pub order: usize,
    #[command(flatten)]
    pub output: OutputOpts,
}

#[derive(Debug, Subcommand)]
pub enum LimitsCommand {
    /// E X_t^m = Γ(1+m)/Γ(1+me^{−t}).
    Moment {
        #[arg(long)]
        t: f64,
        #[arg(long)]
        m: f64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// ψ_k(λ_1..λ_k) = E exp(−Σ λ_j Y_{t_j}) by the recursion
    /// ψ_k(..., λ_{k−1}, λ_k) = ψ_{k−1}(..., λ_{k−1} + λ_k^{α_k/α_{k−1}}), α_j = e^{−t_j}.
    Laplace {
        /// Strictly increasing times, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        t: Vec<f64>,
        /// One λ ≥ 0 per time, comma separated.
        #[arg(long, value_delimiter = ',', num_args = 1.., required = true)]
        lambda: Vec<f64>,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// κ_j(log Y_t) = (e^{jt} − 1)κ_j(G), κ_j(log X_t) = (−1)^j(1 − e^{−jt})κ_j(G).
    Cumulant {
        #[arg(long, value_enum)]
        which: LogArg,
        #[arg(long)]
        t: f64,
        #[arg(long)]
        j: u32,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// P(x^{e^{−t}} X_t ≤ y) − P(y^{e^t} Y_t ≥ x), estimated by Monte Carlo.
    DualityGap {
        #[arg(long)]
        x: f64,
        #[arg(long)]
        y: f64,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// (1 − e^{−x})^α ≥ 1 − e^{−x^α}; with --grid STEP, sweeps x ∈ [0,10], α ∈ [0,1].
    PowInequality {
        #[arg(long, required_unless_present = "grid")]
        x: Option<f64>,
        #[arg(long, required_unless_present = "grid")]
        alpha: Option<f64>,
        #[arg(long, conflicts_with_all = ["x", "alpha"])]
        grid: Option<f64>,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Draws from the limit marginal laws (one-sided e^{−t}-stable or Mittag–Leffler).
    Sample {
        #[arg(long, value_enum)]
        law: LawArg,
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 1000)]
        reps: u64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpts,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LogArg {
    XTilde,
    YTilde,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LawArg {
    Neveu,
    MittagLeffler,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProcessArg {
    Block,
    Fixation,
}

impl From<ProcessArg> for Process {
    fn from(p: ProcessArg) -> Self {
        match p {
            ProcessArg::Block => Process::Block,
            ProcessArg::Fixation => Process::Fixation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FixationMethodArg {
    Branching,
    Path,
}

impl From<FixationMethodArg> for FixationMethod {
    fn from(m: FixationMethodArg) -> Self {
        match m {
            FixationMethodArg::Branching => FixationMethod::Branching,
            FixationMethodArg::Path => FixationMethod::Path,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Sample paths as (replicate, time, state) rows; holding rate i−1 (block) or i (fixation).
    Path {
        #[arg(long, value_enum)]
        process: ProcessArg,
        #[arg(long)]
        n: u64,
        /// Time horizon.
        #[arg(long)]
        t: f64,
        /// State cap for fixation paths (default n^{e^t}·10³).
        #[arg(long)]
        cap: Option<u64>,
        #[command(flatten)]
        sim: SimOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Fraction of jump-chain walks from i with increments P(η = m) = 1/(m(m+1)) that hit j.
    Hitting {
        #[arg(long, default_value_t = 1)]
        i: u64,
        #[arg(long)]
        j: u64,
        #[command(flatten)]
        sim: SimOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Empirical P(N_t^{(n)} ≤ i) next to the exact absorption law.
    Absorption {
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 1)]
        i: u64,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        sim: SimOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
    /// Draws of X_t^(n) = N_t/n^{e^{−t}} or Y_t^(n) = L_t/n^{e^t}.
    Scaled {
        #[arg(long, value_enum)]
        process: ProcessArg,
        #[arg(long)]
        n: u64,
        #[arg(long)]
        t: f64,
        /// How fixation draws are produced.
        #[arg(long, value_enum, default_value_t = FixationMethodArg::Branching)]
        method: FixationMethodArg,
        #[command(flatten)]
        sim: SimOpts,
        #[command(flatten)]
        output: OutputOpts,
    },
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long, value_enum)]
    pub process: ProcessArg,
    #[arg(long)]
    pub t: f64,
    /// Comma-separated grid of initial states.
    #[arg(long, value_delimiter = ',', num_args = 1.., default_value = "100,1000,10000")]
    pub n: Vec<u64>,
    #[arg(long, default_value_t = 1_000_000)]
    pub ref_reps: u64,
    #[arg(long, value_enum, default_value_t = FixationMethodArg::Branching)]
    pub method: FixationMethodArg,
    #[command(flatten)]
    pub sim: SimOpts,
    #[command(flatten)]
    pub output: OutputOpts,
}

// ---- output records ----

/// A row of CSV output; the JSON form is the serde representation.
pub trait Record: Serialize {
    fn header() -> &'static [&'static str];
    fn cells(&self) -> Vec<String>;
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRecord {
    pub kind: GeneratorKind,
    pub n: usize,
    pub method: String,
    pub eigenvalues: Vec<String>,
    pub r: Vec<Vec<String>>,
    pub l: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEntry {
    pub matrix: String,
    pub i: usize,
    pub j: usize,
    pub value: String,
}

impl Record for MatrixEntry {
    fn header() -> &'static [&'static str] {
        &["matrix", "i", "j", "value"]
    }
    fn cells(&self) -> Vec<String> {
        vec![self.matrix.clone(), self.i.to_string(), self.j.to_string(), self.value.clone()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyRecord {
    pub kind: GeneratorKind,
    pub n: usize,
    pub method: String,
    pub rl_identity: bool,
    pub rdl_generator: bool,
    pub eigenvalues_on_diagonal: bool,
    pub report: String,
}

impl Record for VerifyRecord {
    fn header() -> &'static [&'static str] {
        &["kind", "n", "method", "rl_identity", "rdl_generator", "eigenvalues_on_diagonal", "report"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.kind.name().into(),
            self.n.to_string(),
            self.method.clone(),
            self.rl_identity.to_string(),
            self.rdl_generator.to_string(),
            self.eigenvalues_on_diagonal.to_string(),
            // the report contains commas
            format!("\"{}\"", self.report),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionRecord {
    pub i: usize,
    pub j: usize,
    pub t: f64,
    pub method: TransitionFormula,
    pub value: f64,
}

impl Record for TransitionRecord {
    fn header() -> &'static [&'static str] {
        &["i", "j", "t", "method", "value"]
    }
    fn cells(&self) -> Vec<String> {
        let m = match self.method {
            TransitionFormula::Stirling => "stirling",
            TransitionFormula::Binomial => "binomial",
        };
        vec![self.i.to_string(), self.j.to_string(), num(self.t), m.into(), num(self.value)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ValueField {
    Exact(String),
    Real(f64),
}

impl ValueField {
    fn cell(&self) -> String {
        match self {
            ValueField::Exact(s) => s.clone(),
            ValueField::Real(v) => num(*v),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HittingRecord {
    pub i: usize,
    pub j: usize,
    pub method: String,
    pub value: ValueField,
}

impl Record for HittingRecord {
    fn header() -> &'static [&'static str] {
        &["i", "j", "method", "value"]
    }
    fn cells(&self) -> Vec<String> {
        vec![self.i.to_string(), self.j.to_string(), self.method.clone(), self.value.cell()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbsorptionRecord {
    pub n: u64,
    pub i: u64,
    pub t: f64,
    pub x: Option<f64>,
    pub method: String,
    pub value: f64,
    pub gumbel_limit: Option<f64>,
}

impl Record for AbsorptionRecord {
    fn header() -> &'static [&'static str] {
        &["n", "i", "t", "x", "method", "value", "gumbel_limit"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.i.to_string(),
            num(self.t),
            opt_num(self.x),
            self.method.clone(),
            num(self.value),
            opt_num(self.gumbel_limit),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeworthRecord {
    pub n: u64,
    pub i: u32,
    pub x: f64,
    #[serde(rename = "K")]
    pub order: usize,
    pub value: f64,
    pub exact: f64,
    pub gumbel_limit: f64,
}

impl Record for EdgeworthRecord {
    fn header() -> &'static [&'static str] {
        &["n", "i", "x", "K", "value", "exact", "gumbel_limit"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            self.i.to_string(),
            num(self.x),
            self.order.to_string(),
            num(self.value),
            num(self.exact),
            num(self.gumbel_limit),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub k: usize,
    pub c: f64,
    pub c_inversion: f64,
}

impl Record for CoefficientRecord {
    fn header() -> &'static [&'static str] {
        &["k", "c", "c_inversion"]
    }
    fn cells(&self) -> Vec<String> {
        vec![self.k.to_string(), num(self.c), num(self.c_inversion)]
    }
}

/// Generic (name, value) result used by the small `limits` queries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalarRecord {
    pub quantity: String,
    pub params: String,
    pub value: f64,
}

impl Record for ScalarRecord {
    fn header() -> &'static [&'static str] {
        &["quantity", "params", "value"]
    }
    fn cells(&self) -> Vec<String> {
        vec![self.quantity.clone(), self.params.clone(), num(self.value)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualityRecord {
    pub x: f64,
    pub y: f64,
    pub t: f64,
    pub reps: u64,
    pub seed: u64,
    pub gap: f64,
    pub std_error: f64,
    pub p_block: f64,
    pub p_fixation: f64,
}

impl Record for DualityRecord {
    fn header() -> &'static [&'static str] {
        &["x", "y", "t", "reps", "seed", "gap", "std_error", "p_block", "p_fixation"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            num(self.x),
            num(self.y),
            num(self.t),
            self.reps.to_string(),
            self.seed.to_string(),
            num(self.gap),
            num(self.std_error),
            num(self.p_block),
            num(self.p_fixation),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequalityRecord {
    pub points: u64,
    pub violations: u64,
    pub holds: bool,
}

impl Record for InequalityRecord {
    fn header() -> &'static [&'static str] {
        &["points", "violations", "holds"]
    }
    fn cells(&self) -> Vec<String> {
        vec![self.points.to_string(), self.violations.to_string(), self.holds.to_string()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub replicate: u64,
    pub value: f64,
}

impl Record for SampleRecord {
    fn header() -> &'static [&'static str] {
        &["replicate", "value"]
    }
    fn cells(&self) -> Vec<String> {
        vec![self.replicate.to_string(), num(self.value)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathRecord {
    pub replicate: u64,
    pub time: f64,
    pub state: u64,
}

impl Record for PathRecord {
    fn header() -> &'static [&'static str] {
        &["replicate", "time", "state"]
    }
    fn cells(&self) -> Vec<String> {
        vec![self.replicate.to_string(), num(self.time), self.state.to_string()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub quantity: String,
    pub params: String,
    pub value: f64,
    pub std_error: f64,
    pub reps: u64,
    pub seed: u64,
    pub exact: f64,
}

impl Record for EstimateRecord {
    fn header() -> &'static [&'static str] {
        &["quantity", "params", "value", "std_error", "reps", "seed", "exact"]
    }
    fn cells(&self) -> Vec<String> {
        vec![
            self.quantity.clone(),
            self.params.clone(),
            num(self.value),
            num(self.std_error),
            self.reps.to_string(),
            self.seed.to_string(),
            num(self.exact),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergeRecord {
    pub n: u64,
    pub t: f64,
    pub ks: f64,
    pub reps: u64,
    pub seed: u64,
}

impl Record for ConvergeRecord {
    fn header() -> &'static [&'static str] {
        &["n", "t", "ks", "reps", "seed"]
    }
    fn cells(&self) -> Vec<String> {
        vec![self.n.to_string(), num(self.t), num(self.ks), self.reps.to_string(), self.seed.to_string()]
    }
}

fn io_err(e: std::io::Error) -> CoalabError {
    CoalabError::NumericInstability(format!("output error: {e}"))
}

fn write_json<T: Serialize + ?Sized>(out: &mut dyn Write, value: &T) -> Result<()> {
    let s = serde_json::to_string(value).map_err(|e| CoalabError::Domain(format!("json: {e}")))?;
    writeln!(out, "{s}").map_err(io_err)
}

/// Writes one record (a JSON object) or several (a JSON array).
fn emit<T: Record>(out: &mut dyn Write, format: Format, records: &[T], single: bool) -> Result<()> {
    match format {
        Format::Json if single && records.len() == 1 => write_json(out, &records[0]),
        Format::Json => write_json(out, records),
        Format::Csv => {
            let mut buf = String::new();
            buf.push_str(&T::header().join(","));
            buf.push('\n');
            for r in records {
                buf.push_str(&r.cells().join(","));
                buf.push('\n');
            }
            out.write_all(buf.as_bytes()).map_err(io_err)
        }
    }
}

fn write_diagnostics<T: Serialize>(path: &Option<PathBuf>, value: &T) -> Result<()> {
    if let Some(p) = path {
        let s = serde_json::to_string_pretty(value).map_err(|e| CoalabError::Domain(format!("json: {e}")))?;
        std::fs::write(p, s + "\n").map_err(io_err)?;
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct RunDiagnostics<'a> {
    command: &'a str,
    seed: u64,
    reps: u64,
    threads: usize,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    samples: Vec<GridDiagnostics>,
}

#[derive(Debug, Serialize)]
struct GridDiagnostics {
    n: u64,
    #[serde(flatten)]
    diagnostics: SampleDiagnostics,
}

fn execute(cli: Cli, out: &mut dyn Write) -> Result<()> {
    match cli.command {
        Command::Spectral(a) => run_spectral(a, out),
        Command::Transition(a) => {
            let tp = TimePoint::new(a.t)?;
            let js: Vec<usize> = match a.j {
                Some(j) => vec![j],
                None => (a.i..=a.trunc.unwrap_or(a.i + 20)).collect(),
            };
            let records = js
                .into_iter()
                .map(|j| {
                    Ok(TransitionRecord { i: a.i, j, t: a.t, method: a.method, value: fixation_transition(a.i, j, tp, a.method)? })
                })
                .collect::<Result<Vec<_>>>()?;
            emit(out, a.output.format, &records, a.j.is_some())
        }
        Command::Hitting(a) => {
            let value = match a.method.method() {
                Some(m) => match hitting_probability(a.i, a.j, m)? {
                    HittingValue::Exact(q) => ValueField::Exact(rational_string(&q)),
                    HittingValue::Real(v) => ValueField::Real(v),
                },
                None => {
                    if a.i != 1 {
                        return Err(CoalabError::Domain("the asymptotic form is for i = 1".into()));
                    }
                    ValueField::Real(hitting_asymptotic(a.j as u64)?)
                }
            };
            let rec = HittingRecord { i: a.i, j: a.j, method: a.method.name().into(), value };
            emit(out, a.output.format, &[rec], true)
        }
        Command::Absorption(a) => {
            let (t, gumbel) = match (a.t, a.x) {
                (Some(t), _) => (t, None),
                (None, Some(x)) => {
                    if a.n < 3 {
                        return Err(CoalabError::Domain("--x needs n >= 3".into()));
                    }
                    (x + (a.n as f64).ln().ln(), Some(gumbel_limit_cdf(a.i as u32, x)))
                }
                (None, None) => unreachable!("clap requires --t or --x"),
            };
            let value = match a.method {
                AbsorptionMethod::Gamma => absorption_cdf(a.n, a.i, t)?,
                AbsorptionMethod::Duality => block_tail_via_duality(a.n, a.i, TimePoint::new(t)?)?,
            };
            let method = match a.method {
                AbsorptionMethod::Gamma => "gamma",
                AbsorptionMethod::Duality => "duality",
            };
            let rec = AbsorptionRecord { n: a.n, i: a.i, t, x: a.x, method: method.into(), value, gumbel_limit: gumbel };
            emit(out, a.output.format, &[rec], true)
        }
        Command::Edgeworth(a) => match (a.n, a.x) {
            (Some(n), Some(x)) => {
                let value = edgeworth_cdf(n, a.i, x, a.order)?;
                let exact = absorption_cdf(n, u64::from(a.i), x + (n as f64).ln().ln())?;
                let rec = EdgeworthRecord {
                    n,
                    i: a.i,
                    x,
                    order: a.order,
                    value,
                    exact,
                    gumbel_limit: gumbel_limit_cdf(a.i, x),
                };
                emit(out, a.output.format, &[rec], true)
            }
            _ => {
                let c = edgeworth_c(a.order)?.c;
                let inv = edgeworth_c_by_inversion(a.order)?;
                let records: Vec<_> =
                    (0..=a.order).map(|k| CoefficientRecord { k, c: c[k], c_inversion: inv[k] }).collect();
                emit(out, a.output.format, &records, false)
            }
        },
        Command::Limits(cmd) => run_limits(cmd, out),
        Command::Simulate(cmd) => run_simulate(cmd, out),
        Command::Converge(a) => run_converge(a, out),
    }
}

fn run_spectral(a: SpectralArgs, out: &mut dyn Write) -> Result<()> {
    let dec = match a.method {
        SpectralMethod::ClosedForm => closed_form_decomposition(a.kind, a.n)?,
        SpectralMethod::Recursive => {
            let g = build_generator(a.kind, a.n);
            let d: Vec<_> = (1..=a.n).map(|i| a.kind.eigenvalue(i)).collect();
            recursive_decomposition(&g, &d)?
        }
    };
    let method = match a.method {
        SpectralMethod::ClosedForm => "closed-form",
        SpectralMethod::Recursive => "recursive",
    };
    if a.verify {
        let rep = verify_decomposition(&dec);
        let rec = VerifyRecord {
            kind: a.kind,
            n: a.n,
            method: method.into(),
            rl_identity: rep.rl_identity,
            rdl_generator: rep.rdl_generator,
            eigenvalues_on_diagonal: rep.eigenvalues_on_diagonal,
            report: rep.to_string(),
        };
        return emit(out, a.output.format, &[rec], true);
    }
    match a.output.format {
        Format::Json => write_json(
            out,
            &SpectralRecord {
                kind: a.kind,
                n: a.n,
                method: method.into(),
                eigenvalues: dec.d.iter().map(rational_string).collect(),
                r: dec.r.to_string_rows(),
                l: dec.l.to_string_rows(),
            },
        ),
        Format::Csv => {
            let mut rows = Vec::new();
            for (name, m) in [("R", &dec.r), ("L", &dec.l)] {
                for i in 1..=a.n {
                    for j in 1..=a.n {
                        if m.orientation().contains(i, j) {
                            rows.push(MatrixEntry { matrix: name.into(), i, j, value: rational_string(m.get(i, j)) });
                        }
                    }
                }
            }
            for (idx, d) in dec.d.iter().enumerate() {
                rows.push(MatrixEntry { matrix: "D".into(), i: idx + 1, j: idx + 1, value: rational_string(d) });
            }
            emit(out, Format::Csv, &rows, false)
        }
    }
}

fn scalar(out: &mut dyn Write, format: Format, quantity: &str, params: String, value: f64) -> Result<()> {
    emit(out, format, &[ScalarRecord { quantity: quantity.into(), params, value }], true)
}

fn run_limits(cmd: LimitsCommand, out: &mut dyn Write) -> Result<()> {
    match cmd {
        LimitsCommand::Moment { t, m, output } => {
            scalar(out, output.format, "ml-moment", format!("t={t};m={m}"), ml_moment(TimePoint::new(t)?, m)?)
        }
        LimitsCommand::Laplace { t, lambda, output } => {
            let v = neveu_laplace_fd(&t, &lambda)?;
            let join = |v: &[f64]| v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(";");
            scalar(out, output.format, "neveu-laplace", format!("t={};lambda={}", join(&t), join(&lambda)), v)
        }
        LimitsCommand::Cumulant { which, t, j, output } => {
            let (which, name) = match which {
                LogArg::XTilde => (LogProcess::XTilde, "x-tilde"),
                LogArg::YTilde => (LogProcess::YTilde, "y-tilde"),
            };
            let v = log_cumulant(LogMarginalSpec { which, t }, j)?;
            scalar(out, output.format, "log-cumulant", format!("which={name};t={t};j={j}"), v)
        }
        LimitsCommand::DualityGap { x, y, t, reps, seed, output } => {
            let g = siegmund_duality_gap(x, y, t, reps, &mut substream(seed, 0))?;
            let rec = DualityRecord {
                x,
                y,
                t,
                reps,
                seed,
                gap: g.gap,
                std_error: g.std_error,
                p_block: g.p_block,
                p_fixation: g.p_fixation,
            };
            emit(out, output.format, &[rec], true)
        }
        LimitsCommand::PowInequality { x, alpha, grid, output } => {
            let (points, violations) = match (grid, x, alpha) {
                (Some(step), _, _) => pow_grid(step)?,
                (None, Some(x), Some(a)) => (1, u64::from(!check_pow_inequality(x, a)?)),
                _ => return Err(CoalabError::Domain("need --x and --alpha, or --grid".into())),
            };
            emit(out, output.format, &[InequalityRecord { points, violations, holds: violations == 0 }], true)
        }
        LimitsCommand::Sample { law, t, reps, seed, output } => {
            let tp = TimePoint::new(t)?;
            let cfg = SimConfig::new(seed, reps);
            let values = cfg.run(|rng, _| {
                Ok(match law {
                    LawArg::Neveu => sample_neveu(tp, rng),
                    LawArg::MittagLeffler => sample_mittag_leffler(tp, rng),
                })
            })?;
            let records: Vec<_> =
                values.into_iter().enumerate().map(|(r, value)| SampleRecord { replicate: r as u64, value }).collect();
            emit(out, output.format, &records, false)
        }
    }
}

/// Counts violations of the inequality on x ∈ [0,10], α ∈ [0,1] with the given step.
pub fn pow_grid(step: f64) -> Result<(u64, u64)> {
    if !(step > 0.0) {
        return Err(CoalabError::Domain(format!("grid step must be positive, got {step}")));
    }
    let nx = (10.0 / step).round() as u64;
    let na = (1.0 / step).round() as u64;
    let mut violations = 0;
    for xi in 0..=nx {
        for ai in 0..=na {
            let x = (xi as f64 * step).min(10.0);
            let a = (ai as f64 * step).min(1.0);
            if !check_pow_inequality(x, a)? {
                violations += 1;
            }
        }
    }
    Ok(((nx + 1) * (na + 1), violations))
}

fn run_simulate(cmd: SimulateCommand, out: &mut dyn Write) -> Result<()> {
    match cmd {
        SimulateCommand::Path { process, n, t, cap, sim, output } => {
            let cfg = sim.config();
            let process = Process::from(process);
            let cap = cap.unwrap_or_else(|| default_state_cap(n, t));
            let paths = cfg.run(|rng, _| match process {
                Process::Block => simulate_block(n, t, rng),
                Process::Fixation => simulate_fixation(n, t, cap, rng),
            })?;
            write_diagnostics(
                &sim.diagnostics,
                &serde_json::json!({
                    "command": "simulate path",
                    "seed": sim.seed,
                    "reps": sim.reps,
                    "threads": sim.threads,
                    "state_cap": cap,
                    "capped_paths": paths.iter().filter(|p| p.exceeded_cap).count(),
                }),
            )?;
            match output.format {
                Format::Json => write_json(out, &paths),
                Format::Csv => {
                    let mut rows = Vec::new();
                    for (r, p) in paths.iter().enumerate() {
                        let times = std::iter::once(0.0).chain(p.jump_times.iter().copied());
                        for (time, &state) in times.zip(&p.states) {
                            rows.push(PathRecord { replicate: r as u64, time, state });
                        }
                    }
                    emit(out, Format::Csv, &rows, false)
                }
            }
        }
        SimulateCommand::Hitting { i, j, sim, output } => {
            let est = estimate_hitting(i, j, &sim.config())?;
            let exact = hitting_probability(i as usize, j as usize, HittingMethod::StirlingShift)?.to_f64();
            write_diagnostics(&sim.diagnostics, &base_diagnostics("simulate hitting", &sim))?;
            let rec = EstimateRecord {
                quantity: "hitting".into(),
                params: format!("i={i};j={j}"),
                value: est.value,
                std_error: est.std_error,
                reps: est.reps,
                seed: sim.seed,
                exact,
            };
            emit(out, output.format, &[rec], true)
        }
        SimulateCommand::Absorption { n, i, t, sim, output } => {
            let est = estimate_absorption(n, i, t, &sim.config())?;
            let exact = absorption_cdf(n, i, t)?;
            write_diagnostics(&sim.diagnostics, &base_diagnostics("simulate absorption", &sim))?;
            let rec = EstimateRecord {
                quantity: "absorption".into(),
                params: format!("n={n};i={i};t={t}"),
                value: est.value,
                std_error: est.std_error,
                reps: est.reps,
                seed: sim.seed,
                exact,
            };
            emit(out, output.format, &[rec], true)
        }
        SimulateCommand::Scaled { process, n, t, method, sim, output } => {
            let s = scaled_marginal_sample(process.into(), n, t, &sim.config(), method.into())?;
            let mut diag = base_diagnostics("simulate scaled", &sim);
            diag.samples.push(GridDiagnostics { n, diagnostics: s.diagnostics.clone() });
            write_diagnostics(&sim.diagnostics, &diag)?;
            let records: Vec<_> =
                s.values.into_iter().enumerate().map(|(r, value)| SampleRecord { replicate: r as u64, value }).collect();
            emit(out, output.format, &records, false)
        }
    }
}

fn base_diagnostics<'a>(command: &'a str, sim: &SimOpts) -> RunDiagnostics<'a> {
    RunDiagnostics { command, seed: sim.seed, reps: sim.reps, threads: sim.threads, samples: Vec::new() }
}

/// KS distances of scaled samples to a reference sample of the limit law,
/// one row per n.
pub fn converge_rows(
    process: Process,
    t: f64,
    grid: &[u64],
    ref_reps: u64,
    method: FixationMethod,
    cfg: &SimConfig,
) -> Result<(Vec<ConvergeRecord>, Vec<SampleDiagnostics>)> {
    let tp = TimePoint::new(t)?;
    let mut rng = substream(cfg.seed, REFERENCE_STREAM);
    let reference: Vec<f64> = (0..ref_reps)
        .map(|_| match process {
            Process::Block => sample_mittag_leffler(tp, &mut rng),
            Process::Fixation => sample_neveu(tp, &mut rng),
        })
        .collect();
    let reference = EmpiricalCdf::new(reference);
    let mut rows = Vec::new();
    let mut diags = Vec::new();
    for &n in grid {
        let s = scaled_marginal_sample(process, n, t, cfg, method)?;
        let ks = ks_distance(&s.values, |x| reference.eval(x))?;
        rows.push(ConvergeRecord { n, t, ks, reps: cfg.reps, seed: cfg.seed });
        diags.push(s.diagnostics);
    }
    Ok((rows, diags))
}

fn run_converge(a: ConvergeArgs, out: &mut dyn Write) -> Result<()> {
    let cfg = a.sim.config();
    let (rows, diags) = converge_rows(a.process.into(), a.t, &a.n, a.ref_reps, a.method.into(), &cfg)?;
    let mut diag = base_diagnostics("converge", &a.sim);
    diag.samples = a.n.iter().zip(diags).map(|(&n, diagnostics)| GridDiagnostics { n, diagnostics }).collect();
    write_diagnostics(&a.sim.diagnostics, &diag)?;
    emit(out, a.output.format, &rows, false)
}

fn exit_code(e: &CoalabError) -> i32 {
    match e {
        CoalabError::NumericInstability(_) | CoalabError::Degenerate(_) => 1,
        CoalabError::Range(_) | CoalabError::Domain(_) => 2,
    }
}

/// Runs the command line `args` (including the program name), writing
/// results to `out` and messages to `err`. Returns the exit status.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                2
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match execute(cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

/// [`run_with`] on the process's standard streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let code = run_with(args, &mut out, &mut stderr.lock());
    if out.flush().is_err() {
        return 1;
    }
    code
}
