//! Low-degree advantage: the r-value upper bounds, a geometric-series bound
//! and an exact evaluation for tiny instances.
//!
//! Gaussian observations (`Y = X + Z`) give
//!
//! ```text
//! Adv_{<=D}^2 <= Σ_{|α| <= D} r_α^2 / α!
//! ```
//!
//! and binary observations with entries in `[τ₀, τ₁]` give the same sum over
//! multilinear `α` with `α!` replaced by `(τ₀ (1 - τ₁))^{|α|}`. Both sums are
//! grouped by isomorphism class and weighted by the exact number of labelled
//! copies of the class in `[n]`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_bigint::BigUint;
use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graphs::{enumerate_classes, labeled_copy_count, ClassCatalog, MultigraphClass, CATALOG_EDGE_LIMIT};
use crate::models::{BinaryParams, Communities, GaussianParams, Label, PriorSpec};
use crate::rvalues::RTable;
use crate::scalar::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Gaussian,
    Binary,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelPair {
    Gaussian { p: GaussianParams, q: GaussianParams },
    Binary { p: BinaryParams, q: BinaryParams },
}

impl ModelPair {
    pub fn mode(&self) -> Mode {
        match self {
            ModelPair::Gaussian { .. } => Mode::Gaussian,
            ModelPair::Binary { .. } => Mode::Binary,
        }
    }

    pub fn communities(&self) -> (&Communities, &Communities) {
        match self {
            ModelPair::Gaussian { p, q } => (&p.communities, &q.communities),
            ModelPair::Binary { p, q } => (&p.communities, &q.communities),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdvQuery {
    pub models: ModelPair,
    pub d_max: u32,
    /// Number of vertices the bound is evaluated at.
    pub n: u64,
}

impl AdvQuery {
    pub fn gaussian(p: GaussianParams, q: GaussianParams, d_max: u32) -> Self {
        let n = p.n();
        Self { models: ModelPair::Gaussian { p, q }, d_max, n }
    }

    pub fn binary(p: BinaryParams, q: BinaryParams, d_max: u32) -> Self {
        let n = p.n();
        Self { models: ModelPair::Binary { p, q }, d_max, n }
    }

    pub fn constants(&self) -> DerivedConstants {
        let (p, q) = self.models.communities();
        let (m, mp) = (p.m(), q.m());
        DerivedConstants { m_hat: m.max(mp), m_tilde: m.abs_diff(mp), c: (&p.c).min(&q.c).clone() }
    }

    fn check_degree(&self) -> Result<()> {
        if self.d_max > CATALOG_EDGE_LIMIT {
            return Err(crate::GraphError::CatalogLimit { d_max: self.d_max, limit: CATALOG_EDGE_LIMIT }.into());
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DerivedConstants {
    /// `max(M, M')`
    pub m_hat: usize,
    /// `|M - M'|`
    pub m_tilde: usize,
    #[serde(serialize_with = "scalar::ser_rational")]
    pub c: Rational,
}

/// Contribution of all classes with `d` edges on `v` vertices.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contribution {
    pub d: u32,
    pub v: usize,
    pub classes: usize,
    #[serde(serialize_with = "scalar::ser_rational")]
    pub exact: Rational,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesBound {
    /// `(2 D² M̂ λ / C)² (k²/n ∨ 1)`
    #[serde(serialize_with = "scalar::ser_rational")]
    pub ratio: Rational,
    pub infinite: bool,
    /// `1 + D Σ_{d=1}^{D} ratio^d`; absent when `ratio >= 1`.
    #[serde(serialize_with = "ser_opt_rational")]
    pub exact: Option<Rational>,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdvantageReport {
    pub mode: Mode,
    pub d_max: u32,
    pub n: u64,
    pub total_bound: f64,
    /// `total_bound²` as an exact rational.
    #[serde(serialize_with = "scalar::ser_rational")]
    pub total_bound_sq: Rational,
    pub contributions: Vec<Contribution>,
    pub derived_constants: DerivedConstants,
    pub series_bound: SeriesBound,
    /// Whether forests were left out because both priors share tree moments.
    pub forests_dropped: bool,
    pub classes_summed: usize,
    pub oracle_value: Option<f64>,
}

fn ser_opt_rational<S: serde::Serializer>(v: &Option<Rational>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_str(&r.to_string()),
        None => s.serialize_none(),
    }
}

/// Gaussian bound, enumerating the catalog it needs.
pub fn adv_bound_gaussian(qy: &AdvQuery) -> Result<AdvantageReport> {
    qy.check_degree()?;
    let (p, q) = gaussian_pair(qy)?;
    let drop = PriorSpec::gaussian(p).shares_tree_moments_with(&PriorSpec::gaussian(q));
    let catalog = enumerate_classes(qy.d_max, true, drop)?;
    adv_bound_gaussian_with(qy, &catalog)
}

/// Gaussian bound over a supplied catalog. The catalog must cover degree
/// `d_max` and, unless both priors share tree moments, include forests.
pub fn adv_bound_gaussian_with(qy: &AdvQuery, catalog: &ClassCatalog) -> Result<AdvantageReport> {
    qy.check_degree()?;
    let (p, q) = gaussian_pair(qy)?;
    let table = RTable::new(PriorSpec::gaussian(p), PriorSpec::gaussian(q));
    let drop = table.tree_moments_agree();
    check_catalog(catalog, qy.d_max, true, drop)?;
    let classes: Vec<&MultigraphClass> = relevant(catalog, qy.d_max, drop, false);
    let n = BigUint::from(qy.n);
    let terms = classes
        .par_iter()
        .map(|g| {
            let r = table.r_value(g)?;
            let count = scalar::from_biguint(&labeled_copy_count(g, &n));
            Ok(((g.d(), g.v()), count * &r * &r / scalar::from_biguint(&g.alpha_factorial())))
        })
        .collect::<Result<Vec<_>>>()?;
    let lambda = p.lambda.clone().max(q.lambda.clone());
    let lambda_sq = &lambda * &lambda;
    let k = (&p.communities.k).max(&q.communities.k).clone();
    Ok(assemble(qy, Mode::Gaussian, terms, classes.len(), drop, &lambda_sq, &k))
}

/// Binary bound, enumerating the catalog it needs.
pub fn adv_bound_binary(qy: &AdvQuery) -> Result<AdvantageReport> {
    qy.check_degree()?;
    let (p, q) = binary_pair(qy)?;
    let (ps, qs) = binary_specs(p, q);
    let drop = ps.shares_tree_moments_with(&qs);
    let catalog = enumerate_classes(qy.d_max, false, drop)?;
    adv_bound_binary_with(qy, &catalog)
}

/// Binary bound over a supplied catalog; only simple loop-free classes are
/// used.
pub fn adv_bound_binary_with(qy: &AdvQuery, catalog: &ClassCatalog) -> Result<AdvantageReport> {
    qy.check_degree()?;
    let (p, q) = binary_pair(qy)?;
    let (ps, qs) = binary_specs(p, q);
    let table = RTable::new(ps, qs);
    let drop = table.tree_moments_agree();
    check_catalog(catalog, qy.d_max, false, drop)?;
    let tau0 = (&p.q).min(&q.q).clone();
    let tau1 = (&p.tau1).max(&q.tau1).clone();
    let denom = &tau0 * (Rational::one() - &tau1);
    let classes: Vec<&MultigraphClass> = relevant(catalog, qy.d_max, drop, true);
    let n = BigUint::from(qy.n);
    let terms = classes
        .par_iter()
        .map(|g| {
            let r = table.r_value(g)?;
            let count = scalar::from_biguint(&labeled_copy_count(g, &n));
            Ok(((g.d(), g.v()), count * &r * &r / scalar::pow(&denom, g.d() as i32)))
        })
        .collect::<Result<Vec<_>>>()?;
    let s = (&p.s).max(&q.s).clone();
    let lambda_sq = &s * &s / &denom;
    let k = (&p.communities.k).max(&q.communities.k).clone();
    Ok(assemble(qy, Mode::Binary, terms, classes.len(), drop, &lambda_sq, &k))
}

/// Shift-free priors (`λ_eff = s`) when both models share `q`; otherwise the
/// shifted mean matrices themselves.
fn binary_specs(p: &BinaryParams, q: &BinaryParams) -> (PriorSpec, PriorSpec) {
    if p.q == q.q {
        (PriorSpec::binary_shift_free(p), PriorSpec::binary_shift_free(q))
    } else {
        (PriorSpec::binary(p), PriorSpec::binary(q))
    }
}

fn gaussian_pair(qy: &AdvQuery) -> Result<(&GaussianParams, &GaussianParams)> {
    match &qy.models {
        ModelPair::Gaussian { p, q } => Ok((p, q)),
        _ => Err(Error::InvalidParams("gaussian bound needs a gaussian model pair".into())),
    }
}

fn binary_pair(qy: &AdvQuery) -> Result<(&BinaryParams, &BinaryParams)> {
    match &qy.models {
        ModelPair::Binary { p, q } => Ok((p, q)),
        _ => Err(Error::InvalidParams("binary bound needs a binary model pair".into())),
    }
}

fn check_catalog(catalog: &ClassCatalog, d_max: u32, need_loops: bool, forests_dropped: bool) -> Result<()> {
    if catalog.d_max < d_max {
        return Err(Error::InvalidParams(format!("catalog covers d <= {}, need {d_max}", catalog.d_max)));
    }
    if need_loops && !catalog.allow_loops {
        return Err(Error::InvalidParams("gaussian bound needs a catalog with loops".into()));
    }
    if catalog.require_cyclic_components && !forests_dropped {
        return Err(Error::InvalidParams("priors differ on trees; the catalog must include forests".into()));
    }
    Ok(())
}

fn relevant(catalog: &ClassCatalog, d_max: u32, drop: bool, simple: bool) -> Vec<&MultigraphClass> {
    catalog
        .iter()
        .filter(|g| g.d() >= 1 && g.d() <= d_max)
        .filter(|g| !drop || g.all_components_cyclic())
        .filter(|g| !simple || (g.is_simple() && !g.has_loops()))
        .collect()
}

fn assemble(
    qy: &AdvQuery,
    mode: Mode,
    terms: Vec<((u32, usize), Rational)>,
    classes_summed: usize,
    forests_dropped: bool,
    lambda_sq: &Rational,
    k: &Rational,
) -> AdvantageReport {
    let mut grouped: BTreeMap<(u32, usize), (usize, Rational)> = BTreeMap::new();
    for (key, t) in terms {
        let slot = grouped.entry(key).or_insert((0, Rational::zero()));
        slot.0 += 1;
        slot.1 += t;
    }
    let mut total = Rational::one();
    let contributions = grouped
        .into_iter()
        .map(|((d, v), (classes, exact))| {
            total += &exact;
            Contribution { d, v, classes, value: scalar::to_f64(&exact), exact }
        })
        .collect();
    let constants = qy.constants();
    let series = series_bound(qy.d_max, constants.m_hat, lambda_sq, &constants.c, k, qy.n);
    AdvantageReport {
        mode,
        d_max: qy.d_max,
        n: qy.n,
        total_bound: scalar::to_f64(&total).sqrt(),
        total_bound_sq: total,
        contributions,
        derived_constants: constants,
        series_bound: series,
        forests_dropped,
        classes_summed,
        oracle_value: None,
    }
}

/// `1 + D Σ_{d=1}^{D} ratio^d` with `ratio = (2D² M̂ λ / C)² (k²/n ∨ 1)`,
/// taking `λ²` directly so the binary value `s² / (q (1 - τ₁))` stays exact.
pub fn series_bound(d_max: u32, m_hat: usize, lambda_sq: &Rational, c: &Rational, k: &Rational, n: u64) -> SeriesBound {
    let dd = scalar::int(2 * i64::from(d_max) * i64::from(d_max) * m_hat as i64);
    let growth = (k * k / scalar::int(n as i64)).max(Rational::one());
    let ratio = &dd * &dd * lambda_sq / (c * c) * growth;
    if ratio >= Rational::one() {
        return SeriesBound { ratio, infinite: true, exact: None, value: f64::INFINITY };
    }
    let mut sum = Rational::zero();
    let mut term = Rational::one();
    for _ in 0..d_max {
        term *= &ratio;
        sum += &term;
    }
    let exact = Rational::one() + scalar::int(i64::from(d_max)) * sum;
    SeriesBound { value: scalar::to_f64(&exact), ratio, infinite: false, exact: Some(exact) }
}

/// Largest `n` the oracle accepts.
pub const ORACLE_MAX_N: u64 = 6;
/// Largest `D` the oracle accepts.
pub const ORACLE_MAX_D: u32 = 3;

/// `Adv_{<=D}` computed as `sqrt(cᵀ G⁺ c)` over the full monomial basis, with
/// `c_α = E_P[Y^α]` and `G_{αβ} = E_Q[Y^{α+β}]` evaluated by summing over
/// every labelling of `[n]`.
pub fn exact_adv_oracle(qy: &AdvQuery) -> Result<f64> {
    if qy.n > ORACLE_MAX_N || qy.d_max > ORACLE_MAX_D {
        return Err(Error::SizeLimit(format!(
            "oracle needs n <= {ORACLE_MAX_N} and D <= {ORACLE_MAX_D}, got n = {}, D = {}",
            qy.n, qy.d_max
        )));
    }
    let n = qy.n as usize;
    let (monomials, moments): (Vec<Vec<u8>>, Box<dyn Fn(&[u8], bool) -> f64 + Sync>) = match &qy.models {
        ModelPair::Gaussian { p, q } => {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
            let mons = monomials(pairs.len(), qy.d_max as usize, false);
            let ep = GaussianMoments::new(&pairs, &PriorSpec::gaussian(p), n, 2 * qy.d_max as usize);
            let eq = GaussianMoments::new(&pairs, &PriorSpec::gaussian(q), n, 2 * qy.d_max as usize);
            (mons, Box::new(move |g: &[u8], under_p: bool| if under_p { ep.moment(g) } else { eq.moment(g) }))
        }
        ModelPair::Binary { p, q } => {
            let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
            let mons = monomials(pairs.len(), qy.d_max as usize, true);
            let ep = BinaryMoments::new(&pairs, &PriorSpec::binary(p), n);
            let eq = BinaryMoments::new(&pairs, &PriorSpec::binary(q), n);
            (mons, Box::new(move |g: &[u8], under_p: bool| if under_p { ep.moment(g) } else { eq.moment(g) }))
        }
    };
    let binary = qy.models.mode() == Mode::Binary;
    let size = monomials.len();
    let c = DVector::from_iterator(size, monomials.iter().map(|a| moments(a, true)));
    // distinct sums α + β, evaluated once
    let combine = |a: &[u8], b: &[u8]| -> Vec<u8> {
        a.iter().zip(b).map(|(x, y)| if binary { (*x).max(*y) } else { x + y }).collect()
    };
    let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut cell = vec![0usize; size * size];
    for i in 0..size {
        for j in i..size {
            let g = combine(&monomials[i], &monomials[j]);
            let next = index.len();
            let id = *index.entry(g).or_insert(next);
            cell[i * size + j] = id;
            cell[j * size + i] = id;
        }
    }
    let mut keys: Vec<(Vec<u8>, usize)> = index.into_iter().collect();
    keys.sort_by_key(|(_, id)| *id);
    let values: Vec<f64> = keys.par_iter().map(|(g, _)| moments(g, false)).collect();
    let gram = DMatrix::from_fn(size, size, |i, j| values[cell[i * size + j]]);

    // diagonal rescaling keeps the spectrum cutoff meaningful
    let scale: Vec<f64> = (0..size).map(|i| 1.0 / gram[(i, i)].sqrt()).collect();
    let gram = DMatrix::from_fn(size, size, |i, j| gram[(i, j)] * scale[i] * scale[j]);
    let c = DVector::from_fn(size, |i, _| c[i] * scale[i]);
    let eig = SymmetricEigen::new(gram);
    let top = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let cutoff = 1e-10 * top;
    let mut norm_sq = 0.0;
    for (idx, &ev) in eig.eigenvalues.iter().enumerate() {
        if ev > cutoff {
            let proj = eig.eigenvectors.column(idx).dot(&c);
            norm_sq += proj * proj / ev;
        }
    }
    Ok(norm_sq.sqrt())
}

/// Attaches the oracle value to a report when the instance is small enough.
pub fn with_oracle(mut report: AdvantageReport, qy: &AdvQuery) -> Result<AdvantageReport> {
    report.oracle_value = Some(exact_adv_oracle(qy)?);
    Ok(report)
}

/// Exponent vectors over `vars` variables of degree at most `d`, constant first.
fn monomials(vars: usize, d: usize, multilinear: bool) -> Vec<Vec<u8>> {
    let mut out = vec![vec![0u8; vars]];
    let mut frontier = vec![(vec![0u8; vars], 0usize)];
    for _ in 0..d {
        let mut next = Vec::new();
        for (m, start) in &frontier {
            for v in *start..vars {
                if multilinear && m[v] > 0 {
                    continue;
                }
                let mut grown = m.clone();
                grown[v] += 1;
                let from = if multilinear { v + 1 } else { v };
                out.push(grown.clone());
                next.push((grown, from));
            }
        }
        frontier = next;
    }
    out
}

/// Every labelling of `[n]` with its probability.
fn labellings(spec: &PriorSpec, n: usize) -> Vec<(f64, Vec<Label>)> {
    let rho = scalar::to_f64(&spec.rho);
    let options: Vec<(Label, f64)> = std::iter::once((Label::Outside, 1.0 - rho))
        .chain(spec.x.iter().enumerate().map(|(l, x)| (Label::Community(l), scalar::to_f64(x) * rho)))
        .filter(|(_, p)| *p > 0.0)
        .collect();
    let mut out = vec![(1.0, Vec::with_capacity(n))];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|(w, lab)| {
                options.iter().map(move |(l, p)| {
                    let mut lab = lab.clone();
                    lab.push(*l);
                    (w * p, lab)
                })
            })
            .collect();
    }
    out
}

/// Per labelling, the conditional means of the observed pairs.
fn conditional_means(pairs: &[(usize, usize)], spec: &PriorSpec, n: usize) -> Vec<(f64, Vec<f64>)> {
    labellings(spec, n)
        .into_iter()
        .map(|(w, lab)| {
            let means = pairs.iter().map(|&(i, j)| scalar::to_f64(&spec.entry(lab[i], lab[j]))).collect();
            (w, means)
        })
        .collect()
}

struct GaussianMoments {
    /// weight and, per pair, raw moments `E[(μ + Z)^m]` for `m <= max_power`
    table: Vec<(f64, Vec<Vec<f64>>)>,
}

impl GaussianMoments {
    fn new(pairs: &[(usize, usize)], spec: &PriorSpec, n: usize, max_power: usize) -> Self {
        let table = conditional_means(pairs, spec, n)
            .into_iter()
            .map(|(w, means)| (w, means.iter().map(|&mu| normal_raw_moments(mu, max_power)).collect()))
            .collect();
        Self { table }
    }

    fn moment(&self, gamma: &[u8]) -> f64 {
        let used: Vec<(usize, usize)> =
            gamma.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, &e)| (i, e as usize)).collect();
        self.table
            .iter()
            .map(|(w, raw)| w * used.iter().map(|&(i, e)| raw[i][e]).product::<f64>())
            .sum()
    }
}

/// `E[(μ + Z)^m]` for `m = 0..=max`, `Z ~ N(0, 1)`.
fn normal_raw_moments(mu: f64, max: usize) -> Vec<f64> {
    // E[Z^j] = (j-1)!! for even j
    let mut z = vec![0.0; max + 1];
    z[0] = 1.0;
    for j in (2..=max).step_by(2) {
        z[j] = z[j - 2] * (j - 1) as f64;
    }
    (0..=max)
        .map(|m| {
            let mut binom = 1.0;
            let mut total = 0.0;
            for j in 0..=m {
                if j > 0 {
                    binom = binom * (m - j + 1) as f64 / j as f64;
                }
                total += binom * mu.powi((m - j) as i32) * z[j];
            }
            total
        })
        .collect()
}

struct BinaryMoments {
    table: Vec<(f64, Vec<f64>)>,
}

impl BinaryMoments {
    fn new(pairs: &[(usize, usize)], spec: &PriorSpec, n: usize) -> Self {
        Self { table: conditional_means(pairs, spec, n) }
    }

    fn moment(&self, gamma: &[u8]) -> f64 {
        let used: Vec<usize> = gamma.iter().enumerate().filter(|(_, &e)| e > 0).map(|(i, _)| i).collect();
        self.table.iter().map(|(w, p)| w * used.iter().map(|&i| p[i]).product::<f64>()).sum()
    }
}
