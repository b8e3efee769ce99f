//! Enumeration of isomorphism classes by edge count, and the on-disk
//! catalog format.
//!
//! Format: `#` lines are comments, except one header line
//! `# catalog d_max=<D> allow_loops=<bool> require_cyclic_components=<bool>`.
//! Every other line is one class: `d v aut edge-list`, where the edge list
//! is the canonical edge list written as `i-j` or `i-j*m` tokens.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;

use super::{canonicalize, parse_edge_list, ExponentVector, MultigraphClass};
use crate::error::GraphError;

/// Default cap on `d_max` for catalogs.
pub const CATALOG_EDGE_LIMIT: u32 = 7;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassCatalog {
    pub d_max: u32,
    pub allow_loops: bool,
    pub require_cyclic_components: bool,
    classes: BTreeMap<(u32, usize), Vec<MultigraphClass>>,
}

impl ClassCatalog {
    fn from_classes(d_max: u32, allow_loops: bool, require_cyclic_components: bool, list: Vec<MultigraphClass>) -> Self {
        let mut classes: BTreeMap<(u32, usize), Vec<MultigraphClass>> = BTreeMap::new();
        for c in list {
            classes.entry((c.d(), c.v())).or_default().push(c);
        }
        for group in classes.values_mut() {
            group.sort();
            group.dedup();
        }
        Self { d_max, allow_loops, require_cyclic_components, classes }
    }

    /// All classes, ordered by `(d, v)` and then canonical form.
    pub fn iter(&self) -> impl Iterator<Item = &MultigraphClass> {
        self.classes.values().flatten()
    }

    pub fn len(&self) -> usize {
        self.classes.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn group(&self, d: u32, v: usize) -> &[MultigraphClass] {
        self.classes.get(&(d, v)).map_or(&[], Vec::as_slice)
    }

    /// `(d, v)` keys with at least one class.
    pub fn groups(&self) -> impl Iterator<Item = ((u32, usize), &[MultigraphClass])> {
        self.classes.iter().map(|(&k, v)| (k, v.as_slice()))
    }

    pub fn with_edges(&self, d: u32) -> impl Iterator<Item = &MultigraphClass> {
        self.classes.range((d, 0)..=(d, usize::MAX)).flat_map(|(_, v)| v.iter())
    }

    /// Keeps loop-free classes without repeated edges.
    pub fn simple_only(&self) -> ClassCatalog {
        let kept = self.iter().filter(|c| c.is_simple()).cloned().collect();
        ClassCatalog::from_classes(self.d_max, false, self.require_cyclic_components, kept)
    }

    /// Restricts to classes with at most `d_max` edges.
    pub fn truncate(&self, d_max: u32) -> ClassCatalog {
        let kept = self.iter().filter(|c| c.d() <= d_max).cloned().collect();
        ClassCatalog::from_classes(d_max.min(self.d_max), self.allow_loops, self.require_cyclic_components, kept)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("# lowdeg multigraph class catalog: d v aut edge-list\n");
        let _ = writeln!(
            out,
            "# catalog d_max={} allow_loops={} require_cyclic_components={}",
            self.d_max, self.allow_loops, self.require_cyclic_components
        );
        for c in self.iter() {
            let _ = writeln!(out, "{} {} {} {}", c.d(), c.v(), c.aut_count(), c);
        }
        out
    }

    /// Parses [`to_text`](Self::to_text) output. Every class is re-canonicalised
    /// and its `d v aut` columns checked.
    pub fn from_text(text: &str) -> Result<ClassCatalog, GraphError> {
        let mut header: Option<(u32, bool, bool)> = None;
        let mut list = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let err = |msg: String| GraphError::CatalogParse { line: line_no, message: msg };
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(fields) = rest.strip_prefix("catalog ") {
                    header = Some(parse_header(fields).map_err(err)?);
                }
                continue;
            }
            let mut parts = line.splitn(4, char::is_whitespace);
            let mut num = |name: &str| -> Result<u64, GraphError> {
                parts
                    .next()
                    .and_then(|t| t.parse().ok())
                    .ok_or_else(|| err(format!("missing or malformed `{name}`")))
            };
            let d = num("d")?;
            let v = num("v")?;
            let aut = num("aut")?;
            let edges = parts.next().unwrap_or("empty");
            let ev = parse_edge_list(edges).map_err(|e| err(e.to_string()))?;
            let class = canonicalize(&ev);
            if class.canonical_edges() != ev.edges().collect::<Vec<_>>().as_slice() {
                return Err(err(format!("edge list `{edges}` is not in canonical form")));
            }
            if (u64::from(class.d()), class.v() as u64, class.aut_count()) != (d, v, aut) {
                return Err(err(format!(
                    "columns `{d} {v} {aut}` disagree with the edge list (expected `{} {} {}`)",
                    class.d(),
                    class.v(),
                    class.aut_count()
                )));
            }
            list.push(class);
        }
        let (d_max, allow_loops, cyclic) =
            header.ok_or(GraphError::CatalogParse { line: 0, message: "missing `# catalog` header".into() })?;
        Ok(ClassCatalog::from_classes(d_max, allow_loops, cyclic, list))
    }
}

fn parse_header(fields: &str) -> Result<(u32, bool, bool), String> {
    let mut d_max = None;
    let mut loops = None;
    let mut cyclic = None;
    for kv in fields.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("malformed header field `{kv}`"))?;
        match k {
            "d_max" => d_max = Some(v.parse::<u32>().map_err(|_| format!("bad d_max `{v}`"))?),
            "allow_loops" => loops = Some(v.parse::<bool>().map_err(|_| format!("bad allow_loops `{v}`"))?),
            "require_cyclic_components" => {
                cyclic = Some(v.parse::<bool>().map_err(|_| format!("bad require_cyclic_components `{v}`"))?)
            }
            _ => return Err(format!("unknown header field `{k}`")),
        }
    }
    match (d_max, loops, cyclic) {
        (Some(d), Some(l), Some(c)) => Ok((d, l, c)),
        _ => Err("header needs d_max, allow_loops and require_cyclic_components".into()),
    }
}

/// Connected classes with exactly `d` edges for `d = 1..=d_max`.
///
/// Every connected multigraph with `d` edges arises from a connected one with
/// `d - 1` edges by adding a loop, an edge between existing vertices, or a
/// pendant edge to a new vertex (delete a non-bridge, or a leaf edge of a tree).
fn connected_levels(d_max: u32, allow_loops: bool) -> Vec<Vec<MultigraphClass>> {
    let mut levels: Vec<Vec<MultigraphClass>> = vec![Vec::new()];
    if d_max == 0 {
        return levels;
    }
    let mut first = vec![MultigraphClass::edge()];
    if allow_loops {
        first.push(MultigraphClass::self_loop());
    }
    first.sort();
    levels.push(first);
    for _ in 2..=d_max {
        let parents = levels.last().expect("non-empty");
        let mut next: Vec<MultigraphClass> = parents
            .par_iter()
            .flat_map_iter(|p| {
                let base = p.to_exponent_vector();
                let v = p.v();
                let mut kids = Vec::new();
                for i in 0..v {
                    for j in i..v {
                        if i == j && !allow_loops {
                            continue;
                        }
                        let mut g = base.clone();
                        g.add(i, j, 1).expect("in range");
                        kids.push(canonicalize(&g));
                    }
                    let mut g = ExponentVector::new(v + 1);
                    for (a, b, m) in base.edges() {
                        g.add(a, b, m).expect("in range");
                    }
                    g.add(i, v, 1).expect("in range");
                    kids.push(canonicalize(&g));
                }
                kids
            })
            .collect();
        next.sort();
        next.dedup();
        levels.push(next);
    }
    levels
}

/// Complete, duplicate-free list of classes with `1 <= d <= d_max` edges.
///
/// With `require_cyclic_components`, every component of every listed class
/// contains a cycle (so `v <= d`). The empty class is not listed.
pub fn enumerate_classes(d_max: u32, allow_loops: bool, require_cyclic_components: bool) -> Result<ClassCatalog, GraphError> {
    if d_max > CATALOG_EDGE_LIMIT {
        return Err(GraphError::CatalogLimit { d_max, limit: CATALOG_EDGE_LIMIT });
    }
    let levels = connected_levels(d_max, allow_loops);
    let pieces: Vec<&MultigraphClass> = levels
        .iter()
        .flatten()
        .filter(|c| !require_cyclic_components || !c.is_tree())
        .collect();

    // multisets of connected pieces with total edge count <= d_max
    let mut out = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    combine(&pieces, 0, d_max, &mut stack, &mut out);
    Ok(ClassCatalog::from_classes(d_max, allow_loops, require_cyclic_components, out))
}

fn combine(
    pieces: &[&MultigraphClass],
    start: usize,
    budget: u32,
    stack: &mut Vec<usize>,
    out: &mut Vec<MultigraphClass>,
) {
    for idx in start..pieces.len() {
        let d = pieces[idx].d();
        if d > budget {
            continue;
        }
        stack.push(idx);
        out.push(union_of(stack.iter().map(|&i| pieces[i])));
        combine(pieces, idx, budget - d, stack, out);
        stack.pop();
    }
}

fn union_of<'a>(parts: impl Iterator<Item = &'a MultigraphClass>) -> MultigraphClass {
    let parts: Vec<&MultigraphClass> = parts.collect();
    let total_v = parts.iter().map(|p| p.v()).sum();
    let mut g = ExponentVector::new(total_v);
    let mut offset = 0;
    for p in parts {
        for &(i, j, m) in p.canonical_edges() {
            g.add(i + offset, j + offset, m).expect("in range");
        }
        offset += p.v();
    }
    canonicalize(&g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(cat: &ClassCatalog, d: u32) -> Vec<String> {
        cat.with_edges(d).map(|c| c.to_string()).collect()
    }

    #[test]
    fn one_edge() {
        let cat = enumerate_classes(1, true, false).unwrap();
        assert_eq!(cat.len(), 2);
        let no_loops = enumerate_classes(1, false, false).unwrap();
        assert_eq!(no_loops.len(), 1);
    }

    #[test]
    fn two_edges_with_loops() {
        let cat = enumerate_classes(2, true, false).unwrap();
        let two: Vec<_> = cat.with_edges(2).collect();
        assert_eq!(two.len(), 7, "{:?}", names(&cat, 2));
        let expected = [
            "0-1*2",
            "0-1 1-2",
            "0-1 2-3",
            "0-0 0-1",
            "0-0 1-2",
            "0-0*2",
            "0-0 1-1",
        ];
        for e in expected {
            let c = MultigraphClass::parse(e).unwrap();
            assert!(two.contains(&&c), "missing {e}");
        }
    }

    #[test]
    fn two_edges_cyclic_only() {
        // a loop with a pendant edge is connected with |E| = |V|, so it is not a tree

        let cat = enumerate_classes(2, true, true).unwrap();
        let mut got: Vec<_> = cat.with_edges(2).cloned().collect();
        got.sort();
        let mut want: Vec<_> = ["0-1*2", "0-0*2", "0-0 1-1", "0-0 0-1"].iter().map(|s| MultigraphClass::parse(s).unwrap()).collect();
        want.sort();
        assert_eq!(got, want);
        assert!(cat.iter().all(|c| c.v() <= c.d() as usize));
    }

    #[test]
    fn simple_cyclic_catalog_starts_at_triangle() {
        let cat = enumerate_classes(3, false, true).unwrap().simple_only();
        assert_eq!(cat.len(), 1);
        assert_eq!(cat.iter().next().unwrap(), &MultigraphClass::triangle());
    }

    #[test]
    fn limit() {
        assert!(matches!(enumerate_classes(8, true, true), Err(GraphError::CatalogLimit { d_max: 8, limit: 7 })));
    }

    #[test]
    fn text_round_trip() {
        let cat = enumerate_classes(3, true, true).unwrap();
        let back = ClassCatalog::from_text(&cat.to_text()).unwrap();
        assert_eq!(back, cat);
    }

    #[test]
    fn text_rejects_bad_lines() {
        let bad_aut = "# catalog d_max=3 allow_loops=true require_cyclic_components=false\n3 3 2 0-1 0-2 1-2\n";
        assert!(matches!(ClassCatalog::from_text(bad_aut), Err(GraphError::CatalogParse { line: 2, .. })));
        let non_canonical = "# catalog d_max=3 allow_loops=true require_cyclic_components=false\n1 2 2 1-0\n1 2 2 5-6\n";
        assert!(ClassCatalog::from_text(non_canonical).is_err());
        assert!(ClassCatalog::from_text("1 2 2 0-1\n").is_err());
    }

    #[test]
    fn parallel_enumeration_is_deterministic() {
        let a = enumerate_classes(5, true, false).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| enumerate_classes(5, true, false).unwrap());
        assert_eq!(a, b);
    }
}
