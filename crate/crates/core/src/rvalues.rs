//! r-values of a pair of mean-matrix priors `(P, Q)`.
//!
//! ```text
//! r_∅ = 1,   r_α = E_P[X^α] - Σ_{β ⪇ α} binom(α, β) r_β E_Q[X^{α-β}]
//! ```
//!
//! [`RTable`] memoises by isomorphism class and applies two shortcuts before
//! recursing: a disconnected class is the product of its components, and a
//! tree is zero whenever `P` and `Q` have the same tree moments.
//! [`r_value_naive`] runs the bare recursion on labelled exponent vectors.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use num_traits::{One, Signed, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::{canonicalize, sub_multigraphs, ExponentVector, MultigraphClass, SUBGRAPH_EDGE_LIMIT};
use crate::moments::{enumerated_moment, MomentCache};
use crate::models::PriorSpec;
use crate::scalar::{self, Rational};

#[derive(Debug)]
pub struct RTable {
    p: MomentCache,
    q: MomentCache,
    fast_paths: bool,
    entries: RwLock<HashMap<MultigraphClass, Rational>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CacheStats {
    pub hits: u64,
    pub misses: u64,
    pub entries: usize,
}

impl RTable {
    pub fn new(p: PriorSpec, q: PriorSpec) -> Self {
        Self::build(p, q, true)
    }

    /// Class-memoised recursion only; neither shortcut is taken, so identity
    /// checks (factorisation, forests, affine maps) test the recursion itself.
    pub fn plain(p: PriorSpec, q: PriorSpec) -> Self {
        Self::build(p, q, false)
    }

    fn build(p: PriorSpec, q: PriorSpec, fast_paths: bool) -> Self {
        let mut entries = HashMap::new();
        entries.insert(MultigraphClass::empty(), Rational::one());
        Self {
            p: MomentCache::new(p),
            q: MomentCache::new(q),
            fast_paths,
            entries: RwLock::new(entries),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn p_spec(&self) -> &PriorSpec {
        self.p.spec()
    }

    pub fn q_spec(&self) -> &PriorSpec {
        self.q.spec()
    }

    pub fn uses_fast_paths(&self) -> bool {
        self.fast_paths
    }

    /// Trees have equal moments under `P` and `Q`.
    pub fn tree_moments_agree(&self) -> bool {
        self.p_spec().shares_tree_moments_with(self.q_spec())
    }

    pub fn stats(&self) -> CacheStats {
        CacheStats {
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            entries: self.entries.read().expect("r-table poisoned").len(),
        }
    }

    pub fn moment_p(&self, g: &MultigraphClass) -> Result<Rational> {
        self.p.moment(g)
    }

    pub fn moment_q(&self, g: &MultigraphClass) -> Result<Rational> {
        self.q.moment(g)
    }

    /// Exact `r_g`.
    pub fn r_value(&self, g: &MultigraphClass) -> Result<Rational> {
        if g.d() > SUBGRAPH_EDGE_LIMIT {
            return Err(crate::GraphError::TooManyEdges { edges: g.d(), limit: SUBGRAPH_EDGE_LIMIT }.into());
        }
        if let Some(v) = self.entries.read().expect("r-table poisoned").get(g) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(v.clone());
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let v = self.compute(g)?;
        self.entries.write().expect("r-table poisoned").insert(g.clone(), v.clone());
        Ok(v)
    }

    fn compute(&self, g: &MultigraphClass) -> Result<Rational> {
        if self.fast_paths {
            if self.tree_moments_agree() && g.has_tree_component() {
                return Ok(Rational::zero());
            }
            if g.component_count() > 1 {
                let mut prod = Rational::one();
                for c in g.components() {
                    prod *= self.r_value(&c)?;
                    if prod.is_zero() {
                        break;
                    }
                }
                return Ok(prod);
            }
        }
        let alpha = g.to_exponent_vector();
        let mut acc = self.p.moment(g)?;
        for (beta, mult) in sub_multigraphs(&alpha)? {
            if beta == alpha {
                continue;
            }
            let rb = self.r_value(&canonicalize(&beta))?;
            if rb.is_zero() {
                continue;
            }
            let rest = self.q.moment(&canonicalize(&alpha.minus(&beta)))?;
            acc -= scalar::from_biguint(&mult) * rb * rest;
        }
        Ok(acc)
    }
}

/// The recursion on labelled exponent vectors, with moments from direct
/// label enumeration; memoised only on the labelled vectors themselves.
#[derive(Debug)]
pub struct NaiveR {
    p: PriorSpec,
    q: PriorSpec,
    r: HashMap<ExponentVector, Rational>,
    mp: HashMap<ExponentVector, Rational>,
    mq: HashMap<ExponentVector, Rational>,
}

/// Edge cap for [`NaiveR`].
pub const NAIVE_EDGE_LIMIT: u32 = 6;

impl NaiveR {
    pub fn new(p: PriorSpec, q: PriorSpec) -> Self {
        Self { p, q, r: HashMap::new(), mp: HashMap::new(), mq: HashMap::new() }
    }

    pub fn r_value(&mut self, alpha: &ExponentVector) -> Result<Rational> {
        if alpha.total_degree() > NAIVE_EDGE_LIMIT {
            return Err(Error::SizeLimit(format!(
                "naive recursion supports at most {NAIVE_EDGE_LIMIT} edges, got {}",
                alpha.total_degree()
            )));
        }
        if alpha.is_empty() {
            return Ok(Rational::one());
        }
        if let Some(v) = self.r.get(alpha) {
            return Ok(v.clone());
        }
        let mut acc = moment_of(&mut self.mp, &self.p, alpha);
        for (beta, mult) in sub_multigraphs(alpha)? {
            if beta == *alpha {
                continue;
            }
            let rb = self.r_value(&beta)?;
            let rest = moment_of(&mut self.mq, &self.q, &alpha.minus(&beta));
            acc -= scalar::from_biguint(&mult) * rb * rest;
        }
        self.r.insert(alpha.clone(), acc.clone());
        Ok(acc)
    }
}

fn moment_of(memo: &mut HashMap<ExponentVector, Rational>, spec: &PriorSpec, alpha: &ExponentVector) -> Rational {
    if let Some(v) = memo.get(alpha) {
        return v.clone();
    }
    let v = enumerated_moment(alpha, spec);
    memo.insert(alpha.clone(), v.clone());
    v
}

/// One-off naive r-value; see [`NaiveR`] to share work across calls.
pub fn r_value_naive(alpha: &ExponentVector, p: &PriorSpec, q: &PriorSpec) -> Result<Rational> {
    NaiveR::new(p.clone(), q.clone()).r_value(alpha)
}

/// `a^{|g|} r_g`, checked against a fresh recursion on both priors mapped by
/// `X -> a X + y`.
pub fn r_transform(g: &MultigraphClass, table: &RTable, a: &Rational, y: &Rational) -> Result<Rational> {
    if a.is_zero() {
        return Err(Error::InvalidParams("affine scale a must be nonzero".into()));
    }
    let predicted = scalar::pow(a, g.d() as i32) * table.r_value(g)?;
    let fresh = RTable::plain(
        table.p_spec().with_affine(a.clone(), y.clone()),
        table.q_spec().with_affine(a.clone(), y.clone()),
    );
    let direct = fresh.r_value(g)?;
    if direct != predicted {
        return Err(Error::Identity(format!(
            "transformed r-value {direct} differs from a^d r = {predicted} on {g:?}"
        )));
    }
    Ok(predicted)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RBound {
    #[serde(serialize_with = "scalar::ser_rational")]
    pub value: Rational,
    #[serde(serialize_with = "scalar::ser_rational")]
    pub bound: Rational,
    pub ok: bool,
}

/// `|r_g| <= (|g|+1)^{|g|} (M̂ |a| λ / C)^{|g|} (k/n)^{|V(g)|}`.
pub fn r_bound_check(g: &MultigraphClass, table: &RTable, c: &Rational) -> Result<RBound> {
    let (p, q) = (table.p_spec(), table.q_spec());
    if !p.shares_tree_moments_with(q) {
        return Err(Error::Precondition("both priors must share lambda, k/n, a and y".into()));
    }
    if !c.is_positive() || *c > Rational::one() {
        return Err(Error::Precondition(format!("0 < C <= 1 violated: C = {c}")));
    }
    for (name, s) in [("P", p), ("Q", q)] {
        let xmin = s.x.iter().min().cloned().unwrap_or_else(Rational::zero);
        let mx = scalar::int(s.m() as i64) * xmin;
        if mx < *c {
            return Err(Error::Precondition(format!("M * min x >= C violated for {name}: {mx} < {c}")));
        }
    }
    let value = table.r_value(g)?;
    let bound = r_bound(g, p.m().max(q.m()), &(p.a.abs() * &p.lambda_eff), &p.rho, c);
    Ok(RBound { ok: value.abs() <= bound, value, bound })
}

pub(crate) fn r_bound(g: &MultigraphClass, m_hat: usize, lambda: &Rational, rho: &Rational, c: &Rational) -> Rational {
    let d = g.d() as i32;
    let base = scalar::int(m_hat as i64) * lambda / c;
    scalar::pow(&scalar::int(i64::from(g.d()) + 1), d) * scalar::pow(&base, d) * scalar::pow(rho, g.v() as i32)
}
