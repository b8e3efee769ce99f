//! Multigraphs with self-loops, viewed as exponent vectors over the
//! unordered vertex pairs of `[n]`.
//!
//! An exponent vector `α` assigns a multiplicity to every pair `{i, j}` with
//! `i <= j`; the diagonal pairs are loops. The moment `E[X^α]` of a symmetric
//! random matrix only depends on the isomorphism class of `α` when the law
//! of `X` is exchangeable, so most of the crate works with
//! [`MultigraphClass`], the canonical representative of that class.

mod canon;
mod catalog;
mod subgraphs;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigUint;
use num_traits::One;

pub use canon::canonicalize;
pub use catalog::{enumerate_classes, ClassCatalog, CATALOG_EDGE_LIMIT};
pub use subgraphs::{sub_multigraphs, sub_multigraphs_with_limit, SubMultigraphs, SUBGRAPH_EDGE_LIMIT};

use crate::error::GraphError;

/// Edge multiplicity.
pub type Mult = u32;

/// A multigraph on the labelled vertex set `0..n_vertices`.
///
/// Pairs are stored with `i <= j`; zero multiplicities are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ExponentVector {
    n_vertices: usize,
    edges: BTreeMap<(usize, usize), Mult>,
}

impl ExponentVector {
    pub fn new(n_vertices: usize) -> Self {
        Self { n_vertices, edges: BTreeMap::new() }
    }

    /// Builds a vector from `(i, j, multiplicity)` triples. Repeated pairs add up.
    pub fn from_edges(n_vertices: usize, edges: &[(usize, usize, Mult)]) -> Result<Self, GraphError> {
        let mut g = Self::new(n_vertices);
        for &(i, j, m) in edges {
            g.add(i, j, m)?;
        }
        Ok(g)
    }

    /// Same as [`from_edges`](Self::from_edges) with every multiplicity 1;
    /// `n_vertices` is the smallest that fits.
    pub fn from_pairs(pairs: &[(usize, usize)]) -> Self {
        let n = pairs.iter().map(|&(i, j)| i.max(j) + 1).max().unwrap_or(0);
        let mut g = Self::new(n);
        for &(i, j) in pairs {
            g.add(i, j, 1).expect("vertex count derived from the pairs");
        }
        g
    }

    pub fn add(&mut self, i: usize, j: usize, m: Mult) -> Result<(), GraphError> {
        let n = self.n_vertices;
        if i >= n || j >= n {
            return Err(GraphError::VertexOutOfRange { vertex: i.max(j), n_vertices: n });
        }
        if m > 0 {
            *self.edges.entry((i.min(j), i.max(j))).or_insert(0) += m;
        }
        Ok(())
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn multiplicity(&self, i: usize, j: usize) -> Mult {
        self.edges.get(&(i.min(j), i.max(j))).copied().unwrap_or(0)
    }

    /// `(i, j, multiplicity)` with `i <= j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, Mult)> + '_ {
        self.edges.iter().map(|(&(i, j), &m)| (i, j, m))
    }

    /// Number of distinct pairs with nonzero multiplicity.
    pub fn support_len(&self) -> usize {
        self.edges.len()
    }

    /// `|α|`, the edge count of the multigraph.
    pub fn total_degree(&self) -> u32 {
        self.edges.values().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn has_loops(&self) -> bool {
        self.edges.keys().any(|&(i, j)| i == j)
    }

    /// True when no pair has multiplicity above one and there are no loops.
    pub fn is_simple(&self) -> bool {
        !self.has_loops() && self.edges.values().all(|&m| m == 1)
    }

    /// Vertices touched by at least one edge, ascending.
    pub fn support_vertices(&self) -> Vec<usize> {
        let mut seen = vec![false; self.n_vertices];
        for &(i, j) in self.edges.keys() {
            seen[i] = true;
            seen[j] = true;
        }
        (0..self.n_vertices).filter(|&v| seen[v]).collect()
    }

    /// `|V(α)|`, ignoring isolated vertices.
    pub fn vertex_count(&self) -> usize {
        self.support_vertices().len()
    }

    /// Connected components of the non-isolated part, each as a vertex list.
    pub fn component_vertex_sets(&self) -> Vec<Vec<usize>> {
        let n = self.n_vertices;
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for &(i, j) in self.edges.keys() {
            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for v in self.support_vertices() {
            let root = find(&mut parent, v);
            groups.entry(root).or_default().push(v);
        }
        groups.into_values().collect()
    }

    /// `(vertex count, edge count)` of every component.
    pub fn component_shapes(&self) -> Vec<(usize, u32)> {
        let sets = self.component_vertex_sets();
        let mut owner = vec![usize::MAX; self.n_vertices];
        for (c, set) in sets.iter().enumerate() {
            for &v in set {
                owner[v] = c;
            }
        }
        let mut shapes: Vec<(usize, u32)> = sets.iter().map(|s| (s.len(), 0)).collect();
        for (&(i, _), &m) in &self.edges {
            shapes[owner[i]].1 += m;
        }
        shapes
    }

    /// Components as separate vectors on the original vertex labels.
    pub fn components(&self) -> Vec<ExponentVector> {
        let sets = self.component_vertex_sets();
        let mut owner = vec![usize::MAX; self.n_vertices];
        for (c, set) in sets.iter().enumerate() {
            for &v in set {
                owner[v] = c;
            }
        }
        let mut out: Vec<ExponentVector> = sets.iter().map(|_| ExponentVector::new(self.n_vertices)).collect();
        for (&(i, j), &m) in &self.edges {
            out[owner[i]].edges.insert((i, j), m);
        }
        out
    }

    /// A forest has no cycle; loops and repeated edges are cycles.
    pub fn is_forest(&self) -> bool {
        self.component_shapes().iter().all(|&(v, d)| d as usize + 1 == v)
    }

    /// `β <= α` componentwise.
    pub fn is_sub_of(&self, other: &ExponentVector) -> bool {
        self.edges.iter().all(|(k, &m)| other.edges.get(k).is_some_and(|&om| m <= om))
    }

    /// `α - β`, assuming `β <= α`.
    pub fn minus(&self, beta: &ExponentVector) -> ExponentVector {
        let mut out = ExponentVector::new(self.n_vertices);
        for (&k, &m) in &self.edges {
            let rest = m - beta.edges.get(&k).copied().unwrap_or(0);
            if rest > 0 {
                out.edges.insert(k, rest);
            }
        }
        out
    }

    /// `α + β` on a common vertex set (the larger of the two).
    pub fn plus(&self, other: &ExponentVector) -> ExponentVector {
        let mut out = self.clone();
        out.n_vertices = self.n_vertices.max(other.n_vertices);
        for (&k, &m) in &other.edges {
            *out.edges.entry(k).or_insert(0) += m;
        }
        out
    }

    /// `α!`
    pub fn alpha_factorial(&self) -> BigUint {
        self.edges.values().map(|&m| factorial(m)).product()
    }

    /// `binom(α, β)`, zero unless `β <= α`.
    pub fn binomial(&self, beta: &ExponentVector) -> BigUint {
        if !beta.is_sub_of(self) {
            return BigUint::default();
        }
        self.edges
            .iter()
            .map(|(k, &m)| binomial(m, beta.edges.get(k).copied().unwrap_or(0)))
            .product()
    }

    /// Applies `perm` (old label -> new label) to every vertex.
    pub fn relabel(&self, perm: &[usize]) -> ExponentVector {
        let n = perm.iter().copied().max().map_or(self.n_vertices, |m| (m + 1).max(self.n_vertices));
        let mut out = ExponentVector::new(n);
        for (&(i, j), &m) in &self.edges {
            out.add(perm[i], perm[j], m).expect("permutation within range");
        }
        out
    }
}

impl fmt::Display for ExponentVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_edge_list(f, self.edges())
    }
}

/// Canonical representative of an isomorphism class of multigraphs.
///
/// Vertices are `0..v` with no isolated vertex (except the empty class).
/// Components are laid out consecutively in a fixed order, and each is in
/// canonical form, so two classes are equal exactly when the underlying
/// multigraphs are isomorphic.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultigraphClass {
    pub(crate) d: u32,
    pub(crate) v: usize,
    pub(crate) edges: Vec<(usize, usize, Mult)>,
    pub(crate) aut: u64,
    pub(crate) n_components: usize,
}

impl MultigraphClass {
    pub fn empty() -> Self {
        Self { d: 0, v: 0, edges: Vec::new(), aut: 1, n_components: 0 }
    }

    pub fn edge() -> Self {
        canonicalize(&ExponentVector::from_pairs(&[(0, 1)]))
    }

    pub fn self_loop() -> Self {
        canonicalize(&ExponentVector::from_pairs(&[(0, 0)]))
    }

    pub fn triangle() -> Self {
        canonicalize(&ExponentVector::from_pairs(&[(0, 1), (1, 2), (0, 2)]))
    }

    /// Parses an edge list such as `0-1 1-2 0-2*2` (see [`Display`](fmt::Display)).
    pub fn parse(text: &str) -> Result<Self, GraphError> {
        Ok(canonicalize(&parse_edge_list(text)?))
    }

    /// Edge count `|α|`.
    pub fn d(&self) -> u32 {
        self.d
    }

    /// Non-isolated vertex count `|V(α)|`.
    pub fn v(&self) -> usize {
        self.v
    }

    pub fn aut_count(&self) -> u64 {
        self.aut
    }

    pub fn canonical_edges(&self) -> &[(usize, usize, Mult)] {
        &self.edges
    }

    pub fn component_count(&self) -> usize {
        self.n_components
    }

    pub fn is_empty(&self) -> bool {
        self.d == 0
    }

    pub fn is_connected(&self) -> bool {
        self.n_components == 1
    }

    pub fn is_forest(&self) -> bool {
        self.d as usize + self.n_components == self.v
    }

    /// Connected with one more vertex than edges.
    pub fn is_tree(&self) -> bool {
        self.is_connected() && self.d as usize + 1 == self.v
    }

    /// True when some component is a tree.
    pub fn has_tree_component(&self) -> bool {
        self.to_exponent_vector().component_shapes().iter().any(|&(v, d)| d as usize + 1 == v)
    }

    /// Every component contains a cycle (a loop or repeated edge counts).
    pub fn all_components_cyclic(&self) -> bool {
        !self.is_empty() && !self.has_tree_component()
    }

    pub fn has_loops(&self) -> bool {
        self.edges.iter().any(|&(i, j, _)| i == j)
    }

    pub fn is_simple(&self) -> bool {
        self.edges.iter().all(|&(i, j, m)| i != j && m == 1)
    }

    pub fn to_exponent_vector(&self) -> ExponentVector {
        ExponentVector::from_edges(self.v, &self.edges).expect("canonical edges lie within 0..v")
    }

    /// `C(α)`, canonical classes of the connected components.
    pub fn components(&self) -> Vec<MultigraphClass> {
        if self.n_components <= 1 {
            return if self.is_empty() { Vec::new() } else { vec![self.clone()] };
        }
        self.to_exponent_vector().components().iter().map(canonicalize).collect()
    }

    /// `α!`, product of the factorials of the edge multiplicities.
    pub fn alpha_factorial(&self) -> BigUint {
        self.edges.iter().map(|&(_, _, m)| factorial(m)).product()
    }
}

impl fmt::Display for MultigraphClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_edge_list(f, self.edges.iter().copied())
    }
}

fn write_edge_list(f: &mut fmt::Formatter<'_>, edges: impl Iterator<Item = (usize, usize, Mult)>) -> fmt::Result {
    let mut first = true;
    for (i, j, m) in edges {
        if !first {
            f.write_str(" ")?;
        }
        first = false;
        if m == 1 {
            write!(f, "{i}-{j}")?;
        } else {
            write!(f, "{i}-{j}*{m}")?;
        }
    }
    if first {
        f.write_str("empty")?;
    }
    Ok(())
}

/// Parses `i-j[*m]` tokens separated by whitespace or commas; `empty` is the
/// empty graph.
pub fn parse_edge_list(text: &str) -> Result<ExponentVector, GraphError> {
    let mut triples = Vec::new();
    for tok in text.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()) {
        if tok == "empty" {
            continue;
        }
        let bad = || GraphError::BadEdgeToken(tok.to_string());
        let (pair, mult) = match tok.split_once('*') {
            Some((p, m)) => (p, m.parse::<Mult>().map_err(|_| bad())?),
            None => (tok, 1),
        };
        let (a, b) = pair.split_once('-').ok_or_else(bad)?;
        let i: usize = a.parse().map_err(|_| bad())?;
        let j: usize = b.parse().map_err(|_| bad())?;
        if mult == 0 {
            return Err(bad());
        }
        triples.push((i, j, mult));
    }
    let n = triples.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
    ExponentVector::from_edges(n, &triples)
}

/// Class of the vertex-disjoint union.
pub fn disjoint_union(g1: &MultigraphClass, g2: &MultigraphClass) -> MultigraphClass {
    let mut ev = ExponentVector::new(g1.v + g2.v);
    for &(i, j, m) in &g1.edges {
        ev.add(i, j, m).expect("in range");
    }
    for &(i, j, m) in &g2.edges {
        ev.add(i + g1.v, j + g1.v, m).expect("in range");
    }
    canonicalize(&ev)
}

/// Number of labelled copies of `g` inside the complete multigraph-with-loops
/// on `n` vertices: `n (n-1) ... (n-v+1) / |Aut(g)|`, or zero when `n < v`.
pub fn labeled_copy_count(g: &MultigraphClass, n: &BigUint) -> BigUint {
    let v = BigUint::from(g.v);
    if *n < v {
        return BigUint::default();
    }
    let mut falling = BigUint::one();
    let mut term = n.clone();
    for _ in 0..g.v {
        falling *= &term;
        term -= 1u32;
    }
    falling / BigUint::from(g.aut)
}

/// `α!` for a class; see [`MultigraphClass::alpha_factorial`].
pub fn alpha_factorial(g: &MultigraphClass) -> BigUint {
    g.alpha_factorial()
}

pub(crate) fn factorial(m: u32) -> BigUint {
    (1..=m).map(BigUint::from).product()
}

pub(crate) fn binomial(n: u32, k: u32) -> BigUint {
    if k > n {
        return BigUint::default();
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structure_queries() {
        let g = ExponentVector::from_edges(5, &[(0, 1, 2), (2, 2, 1), (3, 4, 1)]).unwrap();
        assert_eq!(g.total_degree(), 4);
        assert_eq!(g.vertex_count(), 5);
        assert_eq!(g.component_shapes(), vec![(2, 2), (1, 1), (2, 1)]);
        assert!(!g.is_forest());
        assert_eq!(g.alpha_factorial(), BigUint::from(2u32));
        assert!(!g.is_simple());
    }

    #[test]
    fn isolated_vertices_are_ignored() {
        let g = ExponentVector::from_edges(3, &[(0, 1, 1)]).unwrap();
        assert_eq!(g.vertex_count(), 2);
        assert_eq!(g.component_vertex_sets(), vec![vec![0, 1]]);
    }

    #[test]
    fn out_of_range_vertex() {
        let err = ExponentVector::from_edges(2, &[(0, 2, 1)]).unwrap_err();
        assert!(matches!(err, GraphError::VertexOutOfRange { vertex: 2, n_vertices: 2 }));
    }

    #[test]
    fn minus_and_binomial() {
        let a = ExponentVector::from_edges(3, &[(0, 1, 3), (1, 2, 1)]).unwrap();
        let b = ExponentVector::from_edges(3, &[(0, 1, 1)]).unwrap();
        assert_eq!(a.binomial(&b), BigUint::from(3u32));
        let rest = a.minus(&b);
        assert_eq!(rest.multiplicity(0, 1), 2);
        assert_eq!(rest.plus(&b), a);
        assert_eq!(b.binomial(&a), BigUint::default());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = parse_edge_list("0-1*2, 1-1 2-0").unwrap();
        assert_eq!(g.multiplicity(1, 0), 2);
        assert_eq!(g.multiplicity(0, 2), 1);
        assert_eq!(parse_edge_list(&g.to_string()).unwrap(), g);
        assert!(parse_edge_list("0_1").is_err());
        assert!(parse_edge_list("0-1*0").is_err());
        assert!(parse_edge_list("empty").unwrap().is_empty());
    }

    #[test]
    fn labeled_copies() {
        let ten = BigUint::from(10u32);
        assert_eq!(labeled_copy_count(&MultigraphClass::edge(), &ten), BigUint::from(45u32));
        assert_eq!(labeled_copy_count(&MultigraphClass::triangle(), &BigUint::from(5u32)), BigUint::from(10u32));
        let cherry = canonicalize(&ExponentVector::from_pairs(&[(0, 1), (1, 2)]));
        assert_eq!(labeled_copy_count(&cherry, &BigUint::from(4u32)), BigUint::from(12u32));
        assert_eq!(labeled_copy_count(&MultigraphClass::triangle(), &BigUint::from(2u32)), BigUint::default());
        assert_eq!(labeled_copy_count(&MultigraphClass::empty(), &ten), BigUint::one());
    }

    /// Brute force over all ordered placements of the 3 vertices of a 2-path.
    #[test]
    fn two_path_copies_by_listing() {
        let mut seen = std::collections::BTreeSet::new();
        for a in 0..4 {
            for b in 0..4 {
                for c in 0..4 {
                    if a == b || b == c || a == c {
                        continue;
                    }
                    let g = ExponentVector::from_edges(4, &[(a, b, 1), (b, c, 1)]).unwrap();
                    seen.insert(g);
                }
            }
        }
        assert_eq!(seen.len(), 12);
    }

    #[test]
    fn alpha_factorials() {
        assert_eq!(alpha_factorial(&MultigraphClass::triangle()), BigUint::one());
        assert_eq!(MultigraphClass::parse("0-1*2").unwrap().alpha_factorial(), BigUint::from(2u32));
        assert_eq!(MultigraphClass::parse("0-0*3").unwrap().alpha_factorial(), BigUint::from(6u32));
    }

    #[test]
    fn disjoint_unions() {
        let e = MultigraphClass::edge();
        let ee = disjoint_union(&e, &e);
        assert_eq!((ee.v(), ee.d(), ee.component_count()), (4, 2, 2));
        assert_eq!(ee.aut_count(), 8);
        assert_eq!(disjoint_union(&MultigraphClass::empty(), &MultigraphClass::triangle()), MultigraphClass::triangle());
        let ll = disjoint_union(&MultigraphClass::self_loop(), &MultigraphClass::self_loop());
        assert_eq!(ll.aut_count(), 2);
        assert_eq!(ll.components(), vec![MultigraphClass::self_loop(), MultigraphClass::self_loop()]);
    }

    #[test]
    fn small_binomials() {
        let row: Vec<u32> = (0..=4).map(|k| binomial(4, k).try_into().unwrap()).collect();
        assert_eq!(row, vec![1, 4, 6, 4, 1]);
        assert_eq!(binomial(2, 3), BigUint::default());
        assert_eq!(factorial(5), BigUint::from(120u32));
    }
}
