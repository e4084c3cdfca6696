//! Triangular generators of the Bolthausen–Sznitman block counting
//! process, its fixation line and the Kingman fixation line, with their
//! spectral decompositions `G = R · diag(D) · L`, `L = R⁻¹`.
//!
//! Everything here is exact rational arithmetic on the `n × n` window of
//! the infinite matrices. Diagonal entries keep their untruncated values;
//! because the matrices are triangular, products of truncations equal
//! truncations of products, so the identities checked by
//! [`verify_decomposition`] hold exactly at every `n`.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    factorial, int_rational, ratio, sign_pow, stirling_first_ref, stirling_second_ref,
    ExactRational,
};
use crate::error::{CoalabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorKind {
    /// Block counting process Q, lower triangular.
    BsBlock,
    /// Fixation line Γ, upper triangular.
    BsFixation,
    /// Kingman fixation line, a pure birth process.
    KingmanFixation,
}

impl GeneratorKind {
    pub const ALL: [GeneratorKind; 3] =
        [GeneratorKind::BsBlock, GeneratorKind::BsFixation, GeneratorKind::KingmanFixation];

    pub fn orientation(self) -> Orientation {
        match self {
            GeneratorKind::BsBlock => Orientation::Lower,
            _ => Orientation::Upper,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            GeneratorKind::BsBlock => "bs-block",
            GeneratorKind::BsFixation => "bs-fixation",
            GeneratorKind::KingmanFixation => "kingman-fixation",
        }
    }

    /// Diagonal entry at state `i`, which is also the `i`-th eigenvalue.
    pub fn eigenvalue(self, i: usize) -> ExactRational {
        let i = BigInt::from(i);
        match self {
            GeneratorKind::BsBlock => int_rational(BigInt::one() - i),
            GeneratorKind::BsFixation => int_rational(-i),
            GeneratorKind::KingmanFixation => int_rational(-(&i * (&i + 1u32)) / 2u32),
        }
    }
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for GeneratorKind {
    type Err = CoalabError;

    fn from_str(s: &str) -> Result<Self> {
        GeneratorKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| CoalabError::Domain(format!("unknown generator kind '{s}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Upper,
    Lower,
}

impl Orientation {
    pub fn contains(self, i: usize, j: usize) -> bool {
        match self {
            Orientation::Upper => i <= j,
            Orientation::Lower => j <= i,
        }
    }

    fn flipped(self) -> Self {
        match self {
            Orientation::Upper => Orientation::Lower,
            Orientation::Lower => Orientation::Upper,
        }
    }
}

/// Dense `n × n` triangular matrix of exact rationals, indexed from 1.
/// Entries outside the triangle are zero and cannot be written.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangularMatrix {
    n: usize,
    orientation: Orientation,
    entries: Vec<ExactRational>,
}

impl TriangularMatrix {
    pub fn zeros(n: usize, orientation: Orientation) -> Self {
        Self { n, orientation, entries: vec![ExactRational::zero(); n * n] }
    }

    pub fn identity(n: usize, orientation: Orientation) -> Self {
        let mut m = Self::zeros(n, orientation);
        for i in 1..=n {
            m.set(i, i, ExactRational::one());
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    fn offset(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.n + (j - 1)
    }

    /// Entry `(i, j)`, 1-based. Panics when the index is outside `1..=n`.
    pub fn get(&self, i: usize, j: usize) -> &ExactRational {
        assert!((1..=self.n).contains(&i) && (1..=self.n).contains(&j), "index ({i},{j}) outside 1..={}", self.n);
        &self.entries[self.offset(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, value: ExactRational) {
        assert!((1..=self.n).contains(&i) && (1..=self.n).contains(&j), "index ({i},{j}) outside 1..={}", self.n);
        assert!(
            self.orientation.contains(i, j) || value.is_zero(),
            "({i},{j}) lies outside the {:?} triangle",
            self.orientation
        );
        let at = self.offset(i, j);
        self.entries[at] = value;
    }

    pub fn diagonal(&self) -> Vec<ExactRational> {
        (1..=self.n).map(|i| self.get(i, i).clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.n, self.orientation.flipped());
        for i in 1..=self.n {
            for j in 1..=self.n {
                if self.orientation.contains(i, j) {
                    t.set(j, i, self.get(i, j).clone());
                }
            }
        }
        t
    }

    /// Exact product; both factors must share size and orientation.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        if self.n != other.n || self.orientation != other.orientation {
            return Err(CoalabError::Domain("matrix product of incompatible triangles".into()));
        }
        let n = self.n;
        let mut out = Self::zeros(n, self.orientation);
        for i in 1..=n {
            for j in 1..=n {
                if !self.orientation.contains(i, j) {
                    continue;
                }
                let (lo, hi) = match self.orientation {
                    Orientation::Upper => (i, j),
                    Orientation::Lower => (j, i),
                };
                let mut acc = ExactRational::zero();
                for k in lo..=hi {
                    let a = self.get(i, k);
                    let b = other.get(k, j);
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * b;
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    /// `self · diag(d)`.
    pub fn scale_columns(&self, d: &[ExactRational]) -> Self {
        let mut out = self.clone();
        for i in 1..=self.n {
            for j in 1..=self.n {
                let at = out.offset(i, j);
                if !out.entries[at].is_zero() {
                    out.entries[at] *= &d[j - 1];
                }
            }
        }
        out
    }

    /// Rows of "num/den" strings, the lossless text form used for export.
    pub fn to_string_rows(&self) -> Vec<Vec<String>> {
        (1..=self.n)
            .map(|i| (1..=self.n).map(|j| rational_string(self.get(i, j))).collect())
            .collect()
    }
}

/// "num/den" text form of an exact rational.
pub fn rational_string(q: &ExactRational) -> String {
    format!("{}/{}", q.numer(), q.denom())
}

/// Parses the "num/den" (or plain integer) text form.
pub fn parse_rational(s: &str) -> Result<ExactRational> {
    let bad = || CoalabError::Domain(format!("'{s}' is not a rational"));
    let (num, den) = match s.split_once('/') {
        Some((a, b)) => (a.trim().parse::<BigInt>().map_err(|_| bad())?, b.trim().parse::<BigInt>().map_err(|_| bad())?),
        None => (s.trim().parse::<BigInt>().map_err(|_| bad())?, BigInt::one()),
    };
    if den.is_zero() {
        return Err(bad());
    }
    Ok(ratio(num, den))
}

/// Entry `(i, j)` of the infinite generator, 1-based.
pub fn generator_entry(kind: GeneratorKind, i: usize, j: usize) -> Result<ExactRational> {
    if i == 0 || j == 0 {
        return Err(CoalabError::Range(format!("generator indices start at 1, got ({i},{j})")));
    }
    let big = |v: usize| BigInt::from(v);
    Ok(match kind {
        GeneratorKind::BsBlock if j < i => {
            let d = i - j;
            ratio(big(i), big(d) * big(d + 1))
        }
        GeneratorKind::BsFixation if j > i => {
            let d = j - i;
            ratio(big(i), big(d) * big(d + 1))
        }
        GeneratorKind::KingmanFixation if j == i + 1 => ratio(big(i) * big(i + 1), big(2)),
        _ if i == j => kind.eigenvalue(i),
        _ => ExactRational::zero(),
    })
}

/// The `n × n` truncation. For the fixation kinds the truncated rows keep
/// their untruncated diagonal, so row sums are negative: mass leaving the
/// window is lost.
pub fn build_generator(kind: GeneratorKind, n: usize) -> TriangularMatrix {
    let mut g = TriangularMatrix::zeros(n, kind.orientation());
    for i in 1..=n {
        for j in 1..=n {
            if kind.orientation().contains(i, j) {
                g.set(i, j, generator_entry(kind, i, j).expect("indices are positive"));
            }
        }
    }
    g
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralDecomposition {
    pub kind: Option<GeneratorKind>,
    pub n: usize,
    pub r: TriangularMatrix,
    pub d: Vec<ExactRational>,
    pub l: TriangularMatrix,
    /// The truncated generator the triple is meant to factor.
    pub generator: TriangularMatrix,
}

fn fact_ratio(num: usize, den: usize) -> ExactRational {
    ratio(factorial(num), factorial(den))
}

/// Closed-form eigenvector matrices.
///
/// * BS fixation line: `r_ij = (i!/j!)(−1)^{i+j} S(j,i)`,
///   `l_ij = (i!/j!)(−1)^{i+j} s(j,i)`, eigenvalues `−i`.
/// * BS block counting: `r_ij = ((j−1)!/(i−1)!)|s(i,j)|`,
///   `l_ij = (−1)^{i+j}((j−1)!/(i−1)!) S(i,j)`, eigenvalues `1−i`.
/// * Kingman fixation line: the product formulas of the pure birth chain
///   with rates `i(i+1)/2`.
pub fn closed_form_decomposition(kind: GeneratorKind, n: usize) -> Result<SpectralDecomposition> {
    let orientation = kind.orientation();
    let mut r = TriangularMatrix::zeros(n, orientation);
    let mut l = TriangularMatrix::zeros(n, orientation);
    for i in 1..=n {
        for j in 1..=n {
            if !orientation.contains(i, j) {
                continue;
            }
            let (rv, lv) = match kind {
                GeneratorKind::BsFixation => {
                    let f = fact_ratio(i, j);
                    let sg = sign_pow(i + j);
                    (
                        &f * int_rational(&sg * stirling_second_ref(j, i)?),
                        &f * int_rational(&sg * stirling_first_ref(j, i)?),
                    )
                }
                GeneratorKind::BsBlock => {
                    let f = fact_ratio(j - 1, i - 1);
                    (
                        &f * int_rational(stirling_first_ref(i, j)?.abs()),
                        &f * int_rational(sign_pow(i + j) * stirling_second_ref(i, j)?),
                    )
                }
                GeneratorKind::KingmanFixation => {
                    let rn = factorial(j) * factorial(j - 1) * factorial(i + j);
                    let rd = factorial(j - i) * factorial(i) * factorial(i - 1) * factorial(2 * j);
                    let ln = factorial(j) * factorial(j - 1) * factorial(2 * i + 1);
                    let ld = factorial(i) * factorial(i - 1) * factorial(j - i) * factorial(i + j + 1);
                    (ratio(sign_pow(j - i) * rn, rd), ratio(ln, ld))
                }
            };
            r.set(i, j, rv);
            l.set(i, j, lv);
        }
    }
    Ok(SpectralDecomposition {
        kind: Some(kind),
        n,
        r,
        d: (1..=n).map(|i| kind.eigenvalue(i)).collect(),
        l,
        generator: build_generator(kind, n),
    })
}

/// Eigenvector matrices from the triangular recursions, normalized to unit
/// diagonal. For an upper triangular `G` with diagonal `d`:
///
/// `r_ij = (d_j − d_i)⁻¹ Σ_{k=i+1..j} g_ik r_kj` and
/// `l_ij = (d_i − d_j)⁻¹ Σ_{k=i..j−1} l_ik g_kj`.
///
/// Lower triangular generators are decomposed through their transpose.
pub fn recursive_decomposition(
    generator: &TriangularMatrix,
    eigenvalues: &[ExactRational],
) -> Result<SpectralDecomposition> {
    let n = generator.n();
    if eigenvalues.len() != n {
        return Err(CoalabError::Domain(format!(
            "{} eigenvalues supplied for a {n}×{n} generator",
            eigenvalues.len()
        )));
    }
    for (i, (d, g)) in eigenvalues.iter().zip(generator.diagonal()).enumerate() {
        if *d != g {
            return Err(CoalabError::Domain(format!(
                "eigenvalue {} at position {} differs from the diagonal entry {}",
                rational_string(d),
                i + 1,
                rational_string(&g)
            )));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if eigenvalues[i] == eigenvalues[j] {
                return Err(CoalabError::Degenerate(format!(
                    "eigenvalue {} repeated at positions {} and {}",
                    rational_string(&eigenvalues[i]),
                    i + 1,
                    j + 1
                )));
            }
        }
    }
    let (r, l) = match generator.orientation() {
        Orientation::Upper => upper_recursion(generator, eigenvalues),
        Orientation::Lower => {
            // Gᵀ = R' D L' gives G = L'ᵀ D R'ᵀ.
            let (rt, lt) = upper_recursion(&generator.transpose(), eigenvalues);
            (lt.transpose(), rt.transpose())
        }
    };
    Ok(SpectralDecomposition {
        kind: None,
        n,
        r,
        d: eigenvalues.to_vec(),
        l,
        generator: generator.clone(),
    })
}

fn upper_recursion(
    g: &TriangularMatrix,
    d: &[ExactRational],
) -> (TriangularMatrix, TriangularMatrix) {
    let n = g.n();
    let mut r = TriangularMatrix::identity(n, Orientation::Upper);
    let mut l = TriangularMatrix::identity(n, Orientation::Upper);
    for j in 1..=n {
        for i in (1..j).rev() {
            let mut acc = ExactRational::zero();
            for k in (i + 1)..=j {
                let gik = g.get(i, k);
                if !gik.is_zero() {
                    acc += gik * r.get(k, j);
                }
            }
            r.set(i, j, acc / (&d[j - 1] - &d[i - 1]));
        }
    }
    for i in 1..=n {
        for j in (i + 1)..=n {
            let mut acc = ExactRational::zero();
            for k in i..j {
                let gkj = g.get(k, j);
                if !gkj.is_zero() {
                    acc += l.get(i, k) * gkj;
                }
            }
            l.set(i, j, acc / (&d[i - 1] - &d[j - 1]));
        }
    }
    (r, l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub n: usize,
    /// R · L = I, exactly.
    pub rl_identity: bool,
    /// R · diag(D) · L equals the truncated generator, exactly.
    pub rdl_generator: bool,
    /// D equals the generator diagonal.
    pub eigenvalues_on_diagonal: bool,
    pub orientation: Orientation,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.rl_identity && self.rdl_generator && self.eigenvalues_on_diagonal
    }
}

impl fmt::Display for VerificationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let label = match self.orientation {
            Orientation::Upper => "Gamma",
            Orientation::Lower => "Q",
        };
        write!(f, "RL=I: {}, RDL={label}: {}", self.rl_identity, self.rdl_generator)
    }
}

pub fn verify_decomposition(dec: &SpectralDecomposition) -> VerificationReport {
    let n = dec.n;
    let orientation = dec.generator.orientation();
    let compatible = dec.r.n() == n
        && dec.l.n() == n
        && dec.d.len() == n
        && dec.r.orientation() == orientation
        && dec.l.orientation() == orientation;
    if !compatible {
        return VerificationReport {
            n,
            rl_identity: false,
            rdl_generator: false,
            eigenvalues_on_diagonal: false,
            orientation,
        };
    }
    let rl = dec.r.mul(&dec.l).expect("compatible shapes");
    let rdl = dec.r.scale_columns(&dec.d).mul(&dec.l).expect("compatible shapes");
    VerificationReport {
        n,
        rl_identity: rl == TriangularMatrix::identity(n, orientation),
        rdl_generator: rdl == dec.generator,
        eigenvalues_on_diagonal: dec.d == dec.generator.diagonal(),
        orientation,
    }
}
