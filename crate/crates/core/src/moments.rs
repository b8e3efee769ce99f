//! Mixed moments `E[X^α]` of a community mean matrix.
//!
//! For the plain matrix (`a = 1`, `y = 0`) with label law `x_ℓ k/n`,
//!
//! ```text
//! E[X^α] = λ^{|α|} (k/n)^{|V(α)|} ∏_{components β} Σ_ℓ x_ℓ^{|V(β)| - |β|}
//! ```
//!
//! since a component contributes only when all its vertices share one
//! community. Affine transforms are handled by expanding `(a X + y)^α` over
//! sub-multigraphs.

use std::collections::HashMap;
use std::sync::RwLock;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graphs::{canonicalize, sub_multigraphs, ExponentVector, MultigraphClass};
use crate::models::{derive_seed, Label, PriorSpec};
use crate::scalar::{self, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    ClosedForm,
    AffineExpansion,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentValue {
    pub exact: Rational,
    pub provenance: Provenance,
}

impl MomentValue {
    pub fn to_f64(&self) -> f64 {
        scalar::to_f64(&self.exact)
    }
}

/// Closed-form moment of the plain matrix described by `spec`; the affine
/// part of `spec` is ignored.
pub fn base_moment(g: &MultigraphClass, spec: &PriorSpec) -> MomentValue {
    let mut value = scalar::pow(&spec.lambda_eff, g.d() as i32) * scalar::pow(&spec.rho, g.v() as i32);
    for comp in g.components() {
        if value.is_zero() {
            break;
        }
        let e = comp.v() as i32 - comp.d() as i32;
        let s: Rational = spec.x.iter().map(|x| scalar::pow(x, e)).sum();
        value *= s;
    }
    MomentValue { exact: value, provenance: Provenance::ClosedForm }
}

/// `E[(a X + y)^α]` by expansion over `β <= α`.
pub fn affine_moment(g: &MultigraphClass, spec: &PriorSpec) -> Result<MomentValue> {
    affine_moment_with(g, spec, &mut |b| base_moment(b, spec).exact)
}

fn affine_moment_with(
    g: &MultigraphClass,
    spec: &PriorSpec,
    base: &mut dyn FnMut(&MultigraphClass) -> Rational,
) -> Result<MomentValue> {
    let d = g.d();
    if spec.y.is_zero() {
        let exact = scalar::pow(&spec.a, d as i32) * base(g);
        return Ok(MomentValue { exact, provenance: Provenance::AffineExpansion });
    }
    let mut total = Rational::zero();
    for (beta, mult) in sub_multigraphs(&g.to_exponent_vector())? {
        let b = beta.total_degree();
        let coeff = scalar::from_biguint(&mult)
            * scalar::pow(&spec.a, b as i32)
            * scalar::pow(&spec.y, (d - b) as i32);
        let class = canonicalize(&beta);
        total += coeff * base(&class);
    }
    Ok(MomentValue { exact: total, provenance: Provenance::AffineExpansion })
}

/// Memoised moments of one [`PriorSpec`], keyed by class. Safe to share
/// across threads; concurrent misses may compute the same value twice.
#[derive(Debug)]
pub struct MomentCache {
    spec: PriorSpec,
    base: RwLock<HashMap<MultigraphClass, Rational>>,
    full: RwLock<HashMap<MultigraphClass, Rational>>,
}

impl MomentCache {
    pub fn new(spec: PriorSpec) -> Self {
        Self { spec, base: RwLock::default(), full: RwLock::default() }
    }

    pub fn spec(&self) -> &PriorSpec {
        &self.spec
    }

    fn base(&self, g: &MultigraphClass) -> Rational {
        if let Some(v) = self.base.read().expect("moment cache poisoned").get(g) {
            return v.clone();
        }
        let v = base_moment(g, &self.spec).exact;
        self.base.write().expect("moment cache poisoned").insert(g.clone(), v.clone());
        v
    }

    /// `E[X̃^g]` for the transformed matrix.
    pub fn moment(&self, g: &MultigraphClass) -> Result<Rational> {
        if self.spec.is_plain() {
            return Ok(self.base(g));
        }
        if let Some(v) = self.full.read().expect("moment cache poisoned").get(g) {
            return Ok(v.clone());
        }
        let v = affine_moment_with(g, &self.spec, &mut |b| self.base(b))?.exact;
        self.full.write().expect("moment cache poisoned").insert(g.clone(), v.clone());
        Ok(v)
    }

    pub fn len(&self) -> usize {
        self.base.read().expect("moment cache poisoned").len() + self.full.read().expect("moment cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Moment of a labelled exponent vector computed straight from the label
/// law: a sum over every labelling of the support vertices, with branches
/// cut as soon as a factor vanishes. Makes no use of isomorphism classes or
/// of the closed form.
pub fn enumerated_moment(alpha: &ExponentVector, spec: &PriorSpec) -> Rational {
    let verts = alpha.support_vertices();
    let v = verts.len();
    if v == 0 {
        return Rational::one();
    }
    let pos = |x: usize| verts.iter().position(|&w| w == x).expect("support vertex");
    // adjacency in support order: for each vertex, edges to itself or earlier vertices
    let mut back: Vec<Vec<(usize, u32)>> = vec![Vec::new(); v];
    for (i, j, m) in alpha.edges() {
        let (a, b) = (pos(i).min(pos(j)), pos(i).max(pos(j)));
        back[b].push((a, m));
    }
    let labels: Vec<(Label, Rational)> = std::iter::once((Label::Outside, Rational::one() - &spec.rho))
        .chain(spec.x.iter().enumerate().map(|(l, x)| (Label::Community(l), x * &spec.rho)))
        .filter(|(_, p)| !p.is_zero())
        .collect();
    let n_labels = spec.m() + 1;
    let index = |l: Label| match l {
        Label::Outside => 0,
        Label::Community(c) => c + 1,
    };
    let mut entry = vec![vec![Rational::zero(); n_labels]; n_labels];
    for a in 0..n_labels {
        for b in 0..n_labels {
            let la = if a == 0 { Label::Outside } else { Label::Community(a - 1) };
            let lb = if b == 0 { Label::Outside } else { Label::Community(b - 1) };
            entry[a][b] = spec.entry(la, lb);
        }
    }

    fn walk(
        depth: usize,
        chosen: &mut Vec<usize>,
        acc: Rational,
        back: &[Vec<(usize, u32)>],
        labels: &[(Label, Rational)],
        index: &dyn Fn(Label) -> usize,
        entry: &[Vec<Rational>],
    ) -> Rational {
        if depth == back.len() {
            return acc;
        }
        let mut total = Rational::zero();
        for (l, p) in labels {
            let li = index(*l);
            let mut term = &acc * p;
            for &(a, m) in &back[depth] {
                let la = if a == depth { li } else { chosen[a] };
                term *= scalar::pow(&entry[la][li], m as i32);
                if term.is_zero() {
                    break;
                }
            }
            if term.is_zero() {
                continue;
            }
            chosen.push(li);
            total += walk(depth + 1, chosen, term, back, labels, index, entry);
            chosen.pop();
        }
        total
    }

    walk(0, &mut Vec::with_capacity(v), Rational::one(), &back, &labels, &index, &entry)
}

/// Monte Carlo estimate of `E[X̃^g]` with its standard error, from `reps`
/// independent label draws on a fixed embedding of `g`.
pub fn mc_moment(g: &MultigraphClass, spec: &PriorSpec, reps: u64, seed: u64) -> Result<(f64, f64)> {
    if reps < 2 {
        return Err(Error::InvalidParams(format!("reps >= 2 violated: reps = {reps}")));
    }
    let rho = scalar::to_f64(&spec.rho);
    let probs: Vec<f64> = spec.x.iter().map(|x| scalar::to_f64(x) * rho).collect();
    let m = spec.m();
    let mut inside = vec![0.0; m];
    for (l, v) in inside.iter_mut().enumerate() {
        *v = scalar::to_f64(&spec.entry(Label::Community(l), Label::Community(l)));
    }
    let outside = scalar::to_f64(&spec.entry(Label::Outside, Label::Outside));
    let edges = g.canonical_edges();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0x6d63]));
    let mut labels = vec![Label::Outside; g.v()];
    let (mut sum, mut sq) = (0.0f64, 0.0f64);
    for _ in 0..reps {
        for slot in labels.iter_mut() {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            *slot = Label::Outside;
            for (l, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    *slot = Label::Community(l);
                    break;
                }
            }
        }
        let mut prod = 1.0;
        for &(i, j, mult) in edges {
            let e = match (labels[i], labels[j]) {
                (Label::Community(a), Label::Community(b)) if a == b => inside[a],
                _ => outside,
            };
            prod *= e.powi(mult as i32);
        }
        sum += prod;
        sq += prod * prod;
    }
    let r = reps as f64;
    let mean = sum / r;
    let var = ((sq - r * mean * mean) / (r - 1.0)).max(0.0);
    Ok((mean, (var / r).sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::{disjoint_union, enumerate_classes};
    use crate::scalar::{int, ratio};

    fn spec(lambda: Rational, rho: Rational, x: Vec<Rational>) -> PriorSpec {
        PriorSpec::new(lambda, rho, x)
    }

    #[test]
    fn small_classes() {
        let s = spec(ratio(3, 2), ratio(1, 10), vec![ratio(1, 3), ratio(2, 3)]);
        assert_eq!(base_moment(&MultigraphClass::edge(), &s).exact, ratio(3, 2) * ratio(1, 100));
        assert_eq!(base_moment(&MultigraphClass::self_loop(), &s).exact, int(2) * ratio(3, 2) * ratio(1, 10));
        let half = spec(int(1), ratio(1, 2), vec![ratio(1, 2), ratio(1, 2)]);
        assert_eq!(base_moment(&MultigraphClass::triangle(), &half).exact, int(2) * ratio(1, 8));
        assert_eq!(base_moment(&MultigraphClass::empty(), &s).exact, int(1));
    }

    #[test]
    fn closed_form_matches_enumeration() {
        let specs = [
            spec(ratio(3, 2), ratio(1, 3), vec![ratio(1, 4), ratio(3, 4)]),
            spec(int(2), ratio(2, 5), vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)]),
        ];
        let cat = enumerate_classes(4, true, false).unwrap();
        for s in &specs {
            for g in cat.iter() {
                assert_eq!(base_moment(g, s).exact, enumerated_moment(&g.to_exponent_vector(), s), "{g:?}");
                let t = s.with_affine(ratio(-2, 3), ratio(1, 5));
                assert_eq!(affine_moment(g, &t).unwrap().exact, enumerated_moment(&g.to_exponent_vector(), &t));
            }
        }
    }

    #[test]
    fn trees_do_not_see_communities() {
        let a = spec(ratio(5, 7), ratio(1, 4), vec![int(1)]);
        let b = spec(ratio(5, 7), ratio(1, 4), vec![ratio(1, 6), ratio(1, 3), ratio(1, 2)]);
        for g in enumerate_classes(5, true, false).unwrap().iter().filter(|g| g.is_tree()) {
            let want = scalar::pow(&ratio(5, 7), g.d() as i32) * scalar::pow(&ratio(1, 4), g.d() as i32 + 1);
            assert_eq!(base_moment(g, &a).exact, want);
            assert_eq!(base_moment(g, &b).exact, want);
        }
    }

    #[test]
    fn multiplicative_over_components() {
        let s = spec(ratio(4, 3), ratio(1, 5), vec![ratio(1, 2), ratio(1, 2)]);
        let cat = enumerate_classes(3, true, false).unwrap();
        let conn: Vec<_> = cat.iter().filter(|g| g.is_connected()).collect();
        for g1 in &conn {
            for g2 in &conn {
                let u = disjoint_union(g1, g2);
                assert_eq!(base_moment(&u, &s).exact, base_moment(g1, &s).exact * base_moment(g2, &s).exact);
            }
        }
    }

    #[test]
    fn affine_cases() {
        let s = spec(ratio(1, 10), ratio(1, 3), vec![int(1)]);
        let binary = s.with_affine(int(1), ratio(1, 5));
        let e = affine_moment(&MultigraphClass::edge(), &binary).unwrap();
        assert_eq!(e.exact, ratio(1, 5) + ratio(1, 10) * ratio(1, 9));
        let zero = spec(int(1), int(0), vec![int(1)]).with_affine(int(1), int(3));
        assert_eq!(affine_moment(&MultigraphClass::triangle(), &zero).unwrap().exact, int(27));
        let cat = enumerate_classes(5, true, false).unwrap();
        for g in cat.iter() {
            assert_eq!(affine_moment(g, &s).unwrap().exact, base_moment(g, &s).exact);
        }
        let cache = MomentCache::new(binary.clone());
        assert_eq!(cache.moment(&MultigraphClass::edge()).unwrap(), e.exact);
        assert!(!cache.is_empty());
    }

    #[test]
    fn monte_carlo_examples() {
        let edge = spec(int(1), ratio(1, 10), vec![int(1)]);
        let (m, se) = mc_moment(&MultigraphClass::edge(), &edge, 200_000, 1).unwrap();
        assert!((m - 0.01).abs() < 5.0 * se, "{m} {se}");
        let lp = spec(int(1), ratio(1, 10), vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)]);
        let (m, se) = mc_moment(&MultigraphClass::self_loop(), &lp, 200_000, 2).unwrap();
        assert!((m - 0.3).abs() < 5.0 * se, "{m} {se}");
        assert_eq!(mc_moment(&MultigraphClass::triangle(), &lp, 10, 3).unwrap(), mc_moment(&MultigraphClass::triangle(), &lp, 10, 3).unwrap());
        assert!(mc_moment(&MultigraphClass::edge(), &lp, 1, 3).is_err());
    }
}
