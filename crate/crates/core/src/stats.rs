//! Degree-1 and degree-3 test statistics with their analytic moments, and a
//! Monte Carlo harness for midpoint-threshold tests.
//!
//! The diagonal sum `T = Σ_i Y_ii` has mean `M k λ`. The signed triangle
//! count `R = Σ_{i<j<k} R_ij R_ik R_jk`, `R_ij = Y_ij - q`, has mean
//! `C(n,3) M k³ s³ / n³`.

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::advantage::ModelPair;
use crate::error::{Error, Result};
use crate::models::{derive_seed, sample_binary, sample_gaussian_diagonal, BinaryParams, GaussianParams, Observations, Sample};
use crate::scalar::{self, Rational};

/// `Σ_i Y_ii`; binary samples have no diagonal and are rejected.
pub fn diag_sum(sample: &Sample) -> Result<f64> {
    match &sample.y {
        Observations::Real(y) => Ok((0..sample.n).map(|i| y[i * sample.n + i]).sum()),
        Observations::Binary(_) => Err(Error::InvalidParams("diagonal sum needs a gaussian sample; binary samples have a zero diagonal".into())),
    }
}

/// Mean `M k λ` and variance bound `n + Σ_ℓ k λ² / x_ℓ` of the diagonal sum.
pub fn diag_moments(p: &GaussianParams) -> (Rational, Rational) {
    let c = &p.communities;
    let m = scalar::int(c.m() as i64);
    let mean = m * &c.k * &p.lambda;
    let spread: Rational = c.x.iter().map(|x| &c.k * &p.lambda * &p.lambda / x).sum();
    (mean, scalar::int(c.n as i64) + spread)
}

/// Exact signed triangle count of a binary sample.
///
/// With `q = a/b` the scaled matrix `A = b Y - a` (zero diagonal) is integral,
/// and `R = trace(A³) / (6 b³)`. The trace is accumulated as
/// `2 Σ_{i<j} A_ij ⟨A_i, A_j⟩` in `i128`, falling back to big integers when
/// the entries are too large.
pub fn signed_triangles(sample: &Sample, q: &Rational) -> Result<Rational> {
    let adj = match &sample.y {
        Observations::Binary(a) => a,
        Observations::Real(_) => return Err(Error::InvalidParams("signed triangle count needs a binary sample".into())),
    };
    let n = sample.n;
    let (num, den) = (q.numer().clone(), q.denom().clone());
    let trace = match (num.to_i64(), den.to_i64()) {
        (Some(a), Some(b)) if fits_i128(n, a, b) => BigInt::from(trace_cubed_small(adj, n, a, b)),
        _ => trace_cubed_big(adj, n, &num, &den),
    };
    let six_b3 = BigInt::from(6) * &den * &den * &den;
    Ok(Rational::new(trace, six_b3))
}

fn fits_i128(n: usize, a: i64, b: i64) -> bool {
    let e = (a.unsigned_abs()).max((b - a).unsigned_abs()) as u128;
    // |⟨A_i, A_j⟩| <= n e², and the outer sum adds n² terms of size e · n e²
    let n = n as u128;
    e.checked_mul(e)
        .and_then(|e2| e2.checked_mul(n))
        .filter(|&dot| dot < i64::MAX as u128)
        .and_then(|dot| dot.checked_mul(e))
        .and_then(|t| t.checked_mul(n * n))
        .is_some_and(|t| t < i128::MAX as u128 / 4)
}

fn trace_cubed_small(adj: &[u8], n: usize, a: i64, b: i64) -> i128 {
    let hi = b - a;
    let rows: Vec<Vec<i64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 0 } else if adj[i * n + j] == 1 { hi } else { -a }).collect())
        .collect();
    let total: i128 = (0..n)
        .into_par_iter()
        .map(|i| {
            let ri = &rows[i];
            let mut acc: i128 = 0;
            for j in i + 1..n {
                let rj = &rows[j];
                let dot: i64 = ri.iter().zip(rj).map(|(x, y)| x * y).sum();
                acc += i128::from(ri[j]) * i128::from(dot);
            }
            acc
        })
        .sum();
    2 * total
}

fn trace_cubed_big(adj: &[u8], n: usize, a: &BigInt, b: &BigInt) -> BigInt {
    let hi = b - a;
    let lo = -a.clone();
    let entry = |i: usize, j: usize| -> BigInt {
        if i == j {
            BigInt::zero()
        } else if adj[i * n + j] == 1 {
            hi.clone()
        } else {
            lo.clone()
        }
    };
    let mut total = BigInt::zero();
    for i in 0..n {
        for j in i + 1..n {
            let dot: BigInt = (0..n).map(|k| entry(i, k) * entry(j, k)).sum();
            total += entry(i, j) * dot;
        }
    }
    total * 2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TriMoments {
    #[serde(serialize_with = "scalar::ser_rational")]
    pub mean: Rational,
    #[serde(serialize_with = "scalar::ser_rational")]
    pub var_bound: Rational,
}

/// Mean and variance bound of the signed triangle count.
pub fn tri_moments(p: &BinaryParams) -> TriMoments {
    let c = &p.communities;
    let n = scalar::int(c.n as i64);
    let m = scalar::int(c.m() as i64);
    let (k, s, q) = (&c.k, &p.s, &p.q);
    let choose3 = &n * (&n - Rational::one()) * (&n - scalar::int(2)) / scalar::int(6);
    let mean = choose3 * &m * scalar::pow(k, 3) * scalar::pow(s, 3) / scalar::pow(&n, 3);
    let third = scalar::ratio(1, 3);
    let var_bound = &m * &m * scalar::pow(k, 5) * scalar::pow(s, 6) / &c.c
        + &m * scalar::pow(k, 4) * scalar::pow(s, 4) * q
        + &m * &m * scalar::pow(k, 4) * scalar::pow(s, 5) / &c.c
        + &third * scalar::pow(&n, 3) * scalar::pow(q, 3)
        + &n * k * k * s * q * q
        + scalar::pow(k, 3) * q * q * s
        + scalar::pow(k, 3) * q * s * s
        + third * m * scalar::pow(k, 3) * scalar::pow(s, 3);
    TriMoments { mean, var_bound }
}

/// `E[R_ij | σ]` for a pair inside community `c`, or in no common community.
pub fn centered_mean(p: &BinaryParams, community: Option<usize>) -> Rational {
    match community {
        Some(c) => &p.s / &p.communities.x[c],
        None => Rational::zero(),
    }
}

/// `E[R_ij² | σ]`; inside community `c` this is `q(1-q) + (s/x_c)(1-2q)`.
pub fn centered_second_moment(p: &BinaryParams, community: Option<usize>) -> Rational {
    let base = &p.q * (Rational::one() - &p.q);
    match community {
        Some(c) => base + &p.s / &p.communities.x[c] * (Rational::one() - scalar::int(2) * &p.q),
        None => base,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    DiagSum,
    SignedTriangles,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AnalyticMoments {
    pub mean_p: f64,
    pub mean_q: f64,
    pub var_bound_p: f64,
    pub var_bound_q: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmpiricalMoments {
    pub mean_p: f64,
    pub mean_q: f64,
    pub var_p: f64,
    pub var_q: f64,
    pub reps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TestStatReport {
    pub statistic: Statistic,
    pub analytic: AnalyticMoments,
    pub empirical: EmpiricalMoments,
    /// `|mean_p - mean_q| / sqrt(max(var_p, var_q))`, empirical.
    pub separation_ratio: f64,
    /// Misclassified fraction of the `2 reps` samples at the analytic midpoint.
    pub error_rate: f64,
    pub threshold: f64,
    #[serde(skip)]
    pub values_p: Vec<f64>,
    #[serde(skip)]
    pub values_q: Vec<f64>,
}

/// Smallest replicate count [`run_experiment`] accepts.
pub const MIN_REPS: usize = 50;

/// Draws `reps` fresh samples from each model, evaluates `statistic` and
/// classifies each by the midpoint of the analytic means. Replicate `r` of
/// model `h` uses seed `derive_seed(seed, [h, r])`.
pub fn run_experiment(models: &ModelPair, statistic: Statistic, reps: usize, seed: u64) -> Result<TestStatReport> {
    if reps < MIN_REPS {
        return Err(Error::InvalidParams(format!("reps >= {MIN_REPS} violated: reps = {reps}")));
    }
    let analytic = match (models, statistic) {
        (ModelPair::Gaussian { p, q }, Statistic::DiagSum) => {
            let (mp, vp) = diag_moments(p);
            let (mq, vq) = diag_moments(q);
            AnalyticMoments {
                mean_p: scalar::to_f64(&mp),
                mean_q: scalar::to_f64(&mq),
                var_bound_p: scalar::to_f64(&vp),
                var_bound_q: scalar::to_f64(&vq),
            }
        }
        (ModelPair::Binary { p, q }, Statistic::SignedTriangles) => {
            if p.q != q.q {
                return Err(Error::InvalidParams("signed triangles centre both models at one q; P and Q must share q".into()));
            }
            let (tp, tq) = (tri_moments(p), tri_moments(q));
            AnalyticMoments {
                mean_p: scalar::to_f64(&tp.mean),
                mean_q: scalar::to_f64(&tq.mean),
                var_bound_p: scalar::to_f64(&tp.var_bound),
                var_bound_q: scalar::to_f64(&tq.var_bound),
            }
        }
        _ => return Err(Error::InvalidParams(format!("{statistic:?} does not apply to {:?} models", models.mode()))),
    };
    let draw = |hyp: u64, rep: usize| -> Result<f64> {
        let s = derive_seed(seed, &[hyp, rep as u64]);
        match models {
            ModelPair::Gaussian { p, q } => {
                let params = if hyp == 0 { p } else { q };
                Ok(sample_gaussian_diagonal(params, s).0.iter().sum())
            }
            ModelPair::Binary { p, q } => {
                let params = if hyp == 0 { p } else { q };
                Ok(scalar::to_f64(&signed_triangles(&sample_binary(params, s), &p.q)?))
            }
        }
    };
    let values_p = (0..reps).into_par_iter().map(|r| draw(0, r)).collect::<Result<Vec<f64>>>()?;
    let values_q = (0..reps).into_par_iter().map(|r| draw(1, r)).collect::<Result<Vec<f64>>>()?;

    let (mean_p, var_p) = mean_var(&values_p);
    let (mean_q, var_q) = mean_var(&values_q);
    let threshold = (analytic.mean_p + analytic.mean_q) / 2.0;
    let p_high = analytic.mean_p >= analytic.mean_q;
    let says_p = |v: f64| if p_high { v > threshold } else { v < threshold };
    let wrong = values_p.iter().filter(|&&v| !says_p(v)).count() + values_q.iter().filter(|&&v| says_p(v)).count();
    let spread = var_p.max(var_q).sqrt();
    let separation_ratio = if spread > 0.0 { (mean_p - mean_q).abs() / spread } else { f64::INFINITY };
    Ok(TestStatReport {
        statistic,
        analytic,
        empirical: EmpiricalMoments { mean_p, mean_q, var_p, var_q, reps },
        separation_ratio,
        error_rate: wrong as f64 / (2 * reps) as f64,
        threshold,
        values_p,
        values_q,
    })
}

/// Sample mean and unbiased sample variance.
pub fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Exact `Σ_{i<j<k} R_ij R_ik R_jk` by the triple loop; for small samples.
pub fn signed_triangles_by_loop(sample: &Sample, q: &Rational) -> Rational {
    let n = sample.n;
    let r = |i: usize, j: usize| -> Rational {
        let y = if sample.get(i, j) > 0.5 { Rational::one() } else { Rational::zero() };
        y - q
    };
    let mut total = Rational::zero();
    for i in 0..n {
        for j in i + 1..n {
            let rij = r(i, j);
            for k in j + 1..n {
                total += &rij * r(i, k) * r(j, k);
            }
        }
    }
    total
}
