//! Planted-community models: parameter bundles, label sampling, mean
//! matrices and observation samplers.
//!
//! Labels are i.i.d.: vertex `i` joins community `ℓ` with probability
//! `x_ℓ k / n` and stays outside (`⋆`) with probability `1 - k/n`. Within
//! community `ℓ` the mean of an observation is `λ / x_ℓ` (Gaussian) or the
//! edge probability is `q + s / x_ℓ` (binary).
//!
//! Sampling is a pure function of `(params, seed)`. Labels come from one
//! ChaCha stream; row `i` of the upper triangle comes from its own ChaCha
//! stream (`set_stream(i)`), so rows can be filled in parallel and the output
//! does not depend on the thread count.

use std::fmt;
use std::io::{self, Write};

use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::{self, Rational};

/// Community proportions `x` together with `k` and `n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Communities {
    pub n: u64,
    #[serde(serialize_with = "scalar::ser_rational")]
    pub k: Rational,
    #[serde(serialize_with = "scalar::ser_rationals")]
    pub x: Vec<Rational>,
    /// Constant with `M · min_ℓ x_ℓ >= c`, `0 < c <= 1`.
    #[serde(serialize_with = "scalar::ser_rational")]
    pub c: Rational,
}

impl Communities {
    pub fn new(n: u64, k: Rational, x: Vec<Rational>, c: Rational) -> Result<Self> {
        let out = Self { n, k, x, c };
        out.validate()?;
        Ok(out)
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    /// `k / n`
    pub fn rho(&self) -> Rational {
        &self.k / scalar::int(self.n as i64)
    }

    pub fn x_min(&self) -> Rational {
        self.x.iter().min().cloned().unwrap_or_else(Rational::zero)
    }

    fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.n == 0 {
            return bad("n must be positive".into());
        }
        if self.x.is_empty() {
            return bad("x must list at least one community proportion".into());
        }
        if let Some(xl) = self.x.iter().find(|v| !v.is_positive()) {
            return bad(format!("x_l > 0 violated by x_l = {xl}"));
        }
        let total: Rational = self.x.iter().sum();
        if !total.is_one() {
            return bad(format!("sum of x must equal 1, got {total}"));
        }
        if self.k.is_negative() || self.k > scalar::int(self.n as i64) {
            return bad(format!("0 <= k <= n violated: k = {}, n = {}", self.k, self.n));
        }
        if !self.c.is_positive() || self.c > Rational::one() {
            return bad(format!("0 < C <= 1 violated: C = {}", self.c));
        }
        let mx = scalar::int(self.m() as i64) * self.x_min();
        if mx < self.c {
            return bad(format!("M * min x >= C violated: {} * {} = {mx} < {}", self.m(), self.x_min(), self.c));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GaussianParams {
    #[serde(flatten)]
    pub communities: Communities,
    #[serde(serialize_with = "scalar::ser_rational")]
    pub lambda: Rational,
}

impl GaussianParams {
    pub fn new(communities: Communities, lambda: Rational) -> Result<Self> {
        if lambda.is_negative() {
            return Err(Error::InvalidParams(format!("lambda >= 0 violated: lambda = {lambda}")));
        }
        Ok(Self { communities, lambda })
    }

    pub fn n(&self) -> u64 {
        self.communities.n
    }

    pub fn m(&self) -> usize {
        self.communities.m()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BinaryParams {
    #[serde(flatten)]
    pub communities: Communities,
    #[serde(serialize_with = "scalar::ser_rational")]
    pub q: Rational,
    #[serde(serialize_with = "scalar::ser_rational")]
    pub s: Rational,
    #[serde(serialize_with = "scalar::ser_rational")]
    pub tau1: Rational,
}

impl BinaryParams {
    pub fn new(communities: Communities, q: Rational, s: Rational, tau1: Rational) -> Result<Self> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !q.is_positive() {
            return bad(format!("q > 0 violated: q = {q}"));
        }
        if s.is_negative() {
            return bad(format!("s >= 0 violated: s = {s}"));
        }
        if tau1 >= Rational::one() {
            return bad(format!("tau1 < 1 violated: tau1 = {tau1}"));
        }
        let top = &q + &s / communities.x_min();
        if top > tau1 {
            return bad(format!("q + s / min x <= tau1 violated: {q} + {s} / {} = {top} > {tau1}", communities.x_min()));
        }
        Ok(Self { communities, q, s, tau1 })
    }

    pub fn n(&self) -> u64 {
        self.communities.n
    }

    pub fn m(&self) -> usize {
        self.communities.m()
    }

    /// `τ₀`, identified with `q`.
    pub fn tau0(&self) -> &Rational {
        &self.q
    }
}

/// Community label; `Outside` is the `⋆` label.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Outside,
    Community(usize),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Outside => f.write_str("*"),
            Label::Community(l) => write!(f, "{}", l + 1),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelAssignment(pub Vec<Label>);

impl LabelAssignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> Label {
        self.0[i]
    }

    /// Same community (never true for `⋆`).
    pub fn same_community(&self, i: usize, j: usize) -> Option<usize> {
        match (self.0[i], self.0[j]) {
            (Label::Community(a), Label::Community(b)) if a == b => Some(a),
            _ => None,
        }
    }

    pub fn community_sizes(&self, m: usize) -> Vec<usize> {
        let mut sizes = vec![0; m];
        for l in &self.0 {
            if let Label::Community(c) = l {
                sizes[*c] += 1;
            }
        }
        sizes
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Observations {
    /// Dense row-major `n × n`, diagonal included.
    Real(Vec<f64>),
    /// Dense row-major `n × n` 0/1 entries, zero diagonal.
    Binary(Vec<u8>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub n: usize,
    pub y: Observations,
    pub sigma: LabelAssignment,
}

impl Sample {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.y {
            Observations::Real(v) => v[i * self.n + j],
            Observations::Binary(v) => f64::from(v[i * self.n + j]),
        }
    }

    pub fn is_binary(&self) -> bool {
        matches!(self.y, Observations::Binary(_))
    }

    /// Builds a binary sample from an adjacency matrix (labels unknown, all `⋆`).
    pub fn from_adjacency(n: usize, adj: Vec<u8>) -> Result<Self> {
        if adj.len() != n * n {
            return Err(Error::InvalidParams(format!("adjacency has {} entries, expected {}", adj.len(), n * n)));
        }
        for i in 0..n {
            if adj[i * n + i] != 0 {
                return Err(Error::InvalidParams(format!("diagonal entry ({i},{i}) must be zero")));
            }
            for j in 0..n {
                let a = adj[i * n + j];
                if a > 1 || a != adj[j * n + i] {
                    return Err(Error::InvalidParams(format!("entry ({i},{j}) must be symmetric 0/1")));
                }
            }
        }
        Ok(Self { n, y: Observations::Binary(adj), sigma: LabelAssignment(vec![Label::Outside; n]) })
    }

    /// Upper-triangle CSV (`i,j,value`) preceded by `#` header lines.
    pub fn write_csv<W: Write>(&self, header: &[(&str, String)], mut out: W) -> io::Result<()> {
        for (k, v) in header {
            writeln!(out, "# {k}={v}")?;
        }
        writeln!(out, "i,j,value")?;
        let binary = self.is_binary();
        for i in 0..self.n {
            let start = if binary { i + 1 } else { i };
            for j in start..self.n {
                if binary {
                    writeln!(out, "{i},{j},{}", self.get(i, j) as u8)?;
                } else {
                    writeln!(out, "{i},{j},{}", self.get(i, j))?;
                }
            }
        }
        Ok(())
    }
}

/// Affine transform `a · X + y` of a community mean matrix whose
/// within-community entries are `λ_eff / x_ℓ` and whose other entries are 0.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PriorSpec {
    pub lambda_eff: Rational,
    /// `k / n`
    pub rho: Rational,
    pub x: Vec<Rational>,
    pub a: Rational,
    pub y: Rational,
}

impl PriorSpec {
    pub fn new(lambda_eff: Rational, rho: Rational, x: Vec<Rational>) -> Self {
        Self { lambda_eff, rho, x, a: Rational::one(), y: Rational::zero() }
    }

    pub fn gaussian(p: &GaussianParams) -> Self {
        Self::new(p.lambda.clone(), p.communities.rho(), p.communities.x.clone())
    }

    /// The binary mean matrix `q + s / x_ℓ` inside communities, `q` elsewhere.
    pub fn binary(p: &BinaryParams) -> Self {
        Self::binary_shift_free(p).with_affine(Rational::one(), p.q.clone())
    }

    /// The binary mean matrix without the constant `q`; same r-values.
    pub fn binary_shift_free(p: &BinaryParams) -> Self {
        Self::new(p.s.clone(), p.communities.rho(), p.communities.x.clone())
    }

    /// Composes another affine map on top: `a' (a X + y) + y'`.
    pub fn with_affine(&self, a: Rational, y: Rational) -> Self {
        assert!(!a.is_zero(), "affine scale must be nonzero");
        let mut out = self.clone();
        out.y = &a * &self.y + y;
        out.a = a * &self.a;
        out
    }

    pub fn m(&self) -> usize {
        self.x.len()
    }

    pub fn is_plain(&self) -> bool {
        self.a.is_one() && self.y.is_zero()
    }

    /// Mean entry for labels `(σᵢ, σⱼ)`.
    pub fn entry(&self, li: Label, lj: Label) -> Rational {
        let base = match (li, lj) {
            (Label::Community(a), Label::Community(b)) if a == b => &self.lambda_eff / &self.x[a],
            _ => Rational::zero(),
        };
        &self.a * base + &self.y
    }

    /// Trees have the same moments under two specs exactly when this holds.
    pub fn shares_tree_moments_with(&self, other: &PriorSpec) -> bool {
        self.lambda_eff == other.lambda_eff && self.rho == other.rho && self.a == other.a && self.y == other.y
    }
}

/// `X̃` for the given labels, as an exact symmetric matrix.
pub fn mean_matrix(spec: &PriorSpec, sigma: &LabelAssignment) -> Vec<Vec<Rational>> {
    let n = sigma.len();
    (0..n).map(|i| (0..n).map(|j| spec.entry(sigma.get(i), sigma.get(j))).collect()).collect()
}

const LABEL_STREAM: u64 = 0x6c61_6265_6c73;
const ROW_STREAM: u64 = 0x726f_7773;

/// SplitMix64 finaliser, used to derive independent seeds.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable seed for a task: folds every tag into the master seed.
pub fn derive_seed(master: u64, tags: &[u64]) -> u64 {
    tags.iter().fold(mix64(master), |acc, &t| mix64(acc ^ mix64(t)))
}

fn label_probabilities(c: &Communities) -> Vec<f64> {
    let rho = scalar::to_f64(&c.rho());
    c.x.iter().map(|x| scalar::to_f64(x) * rho).collect()
}

pub fn sample_labels(c: &Communities, seed: u64) -> LabelAssignment {
    let probs = label_probabilities(c);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[LABEL_STREAM]));
    let n = c.n as usize;
    let labels = (0..n)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            for (l, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    return Label::Community(l);
                }
            }
            Label::Outside
        })
        .collect();
    LabelAssignment(labels)
}

fn row_rng(seed: u64, row: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[ROW_STREAM]));
    rng.set_stream(row as u64);
    rng
}

fn community_means(spec: &PriorSpec) -> Vec<f64> {
    (0..spec.m()).map(|l| scalar::to_f64(&spec.entry(Label::Community(l), Label::Community(l)))).collect()
}

pub fn sample_gaussian(p: &GaussianParams, seed: u64) -> Sample {
    let n = p.n() as usize;
    let sigma = sample_labels(&p.communities, seed);
    let means = community_means(&PriorSpec::gaussian(p));
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = row_rng(seed, i);
            (i..n)
                .map(|j| {
                    let z: f64 = rng.sample(StandardNormal);
                    sigma.same_community(i, j).map_or(0.0, |l| means[l]) + z
                })
                .collect()
        })
        .collect();
    let mut y = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        for (off, &val) in row.iter().enumerate() {
            let j = i + off;
            y[i * n + j] = val;
            y[j * n + i] = val;
        }
    }
    Sample { n, y: Observations::Real(y), sigma }
}

/// Diagonal of [`sample_gaussian`] with the same seed, without the
/// off-diagonal work.
pub fn sample_gaussian_diagonal(p: &GaussianParams, seed: u64) -> (Vec<f64>, LabelAssignment) {
    let n = p.n() as usize;
    let sigma = sample_labels(&p.communities, seed);
    let means = community_means(&PriorSpec::gaussian(p));
    let diag = (0..n)
        .into_par_iter()
        .map(|i| {
            let z: f64 = row_rng(seed, i).sample(StandardNormal);
            sigma.same_community(i, i).map_or(0.0, |l| means[l]) + z
        })
        .collect();
    (diag, sigma)
}

pub fn sample_binary(p: &BinaryParams, seed: u64) -> Sample {
    let n = p.n() as usize;
    let sigma = sample_labels(&p.communities, seed);
    let spec = PriorSpec::binary(p);
    let inside = community_means(&spec);
    let outside = scalar::to_f64(&p.q);
    let rows: Vec<Vec<u8>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = row_rng(seed, i);
            (i + 1..n)
                .map(|j| {
                    let prob = sigma.same_community(i, j).map_or(outside, |l| inside[l]);
                    u8::from(rng.gen::<f64>() < prob)
                })
                .collect()
        })
        .collect();
    let mut y = vec![0u8; n * n];
    for (i, row) in rows.iter().enumerate() {
        for (off, &val) in row.iter().enumerate() {
            let j = i + 1 + off;
            y[i * n + j] = val;
            y[j * n + i] = val;
        }
    }
    Sample { n, y: Observations::Binary(y), sigma }
}
