//! Canonical labelling by individualisation and colour refinement.
//!
//! Each connected component is labelled separately. Inside a component the
//! search branches only on one representative of every twin class (vertices
//! whose transposition is an automorphism), which keeps stars and other
//! high-symmetry shapes linear instead of factorial. The number of leaves that
//! reach the minimal code, weighted by the skipped twins, is `|Aut|`.

use std::collections::BTreeMap;

use super::{ExponentVector, MultigraphClass, Mult};

/// Canonical class of `g`; isolated vertices are dropped.
pub fn canonicalize(g: &ExponentVector) -> MultigraphClass {
    let sets = g.component_vertex_sets();
    if sets.is_empty() {
        return MultigraphClass::empty();
    }
    let mut comps: Vec<ComponentForm> = sets.iter().map(|set| canon_component(g, set)).collect();
    comps.sort_by(|a, b| a.key().cmp(&b.key()));

    let mut edges = Vec::new();
    let mut offset = 0;
    let mut aut: u64 = 1;
    let mut run = 0u64;
    for (idx, c) in comps.iter().enumerate() {
        for &(i, j, m) in &c.edges {
            edges.push((i + offset, j + offset, m));
        }
        offset += c.v;
        aut *= c.aut;
        run = if idx > 0 && comps[idx - 1].key() == c.key() { run + 1 } else { 1 };
        aut *= run;
    }
    edges.sort_unstable();
    MultigraphClass { d: g.total_degree(), v: offset, edges, aut, n_components: comps.len() }
}

struct ComponentForm {
    v: usize,
    d: u32,
    code: Vec<Mult>,
    edges: Vec<(usize, usize, Mult)>,
    aut: u64,
}

impl ComponentForm {
    fn key(&self) -> (usize, u32, &[Mult]) {
        (self.v, self.d, &self.code)
    }
}

fn canon_component(g: &ExponentVector, verts: &[usize]) -> ComponentForm {
    let v = verts.len();
    let mut adj = vec![vec![0 as Mult; v]; v];
    let mut d = 0;
    for (a, &x) in verts.iter().enumerate() {
        for (b, &y) in verts.iter().enumerate() {
            adj[a][b] = g.multiplicity(x, y);
            if a <= b {
                d += adj[a][b];
            }
        }
    }
    let twin = twin_classes(&adj);
    let mut search = Search { adj: &adj, twin: &twin, best: None, count: 0 };
    let start = refine(&adj, vec![0; v]);
    search.descend(start, 1);
    let (code, order) = search.best.expect("a component has at least one leaf");

    // order[p] = vertex at position p
    let mut pos = vec![0; v];
    for (p, &x) in order.iter().enumerate() {
        pos[x] = p;
    }
    let mut edges = Vec::new();
    for a in 0..v {
        for b in a..v {
            if adj[a][b] > 0 {
                let (i, j) = (pos[a].min(pos[b]), pos[a].max(pos[b]));
                edges.push((i, j, adj[a][b]));
            }
        }
    }
    edges.sort_unstable();
    ComponentForm { v, d, code, edges, aut: search.count }
}

/// Twin class id per vertex: `u ~ w` iff swapping them preserves `adj`.
fn twin_classes(adj: &[Vec<Mult>]) -> Vec<usize> {
    let v = adj.len();
    let mut class: Vec<usize> = (0..v).collect();
    for u in 0..v {
        if class[u] != u {
            continue;
        }
        for w in u + 1..v {
            if class[w] != w {
                continue;
            }
            let swappable = adj[u][u] == adj[w][w]
                && (0..v).filter(|&x| x != u && x != w).all(|x| adj[u][x] == adj[w][x]);
            if swappable {
                class[w] = u;
            }
        }
    }
    class
}

/// Iterated colour refinement; cell indices stay ordered consistently with
/// the incoming partition, so the result is isomorphism invariant.
fn refine(adj: &[Vec<Mult>], mut cells: Vec<usize>) -> Vec<usize> {
    let v = adj.len();
    let mut n_cells = count_cells(&cells);
    loop {
        let sigs: Vec<(usize, Mult, Vec<(usize, Mult)>)> = (0..v)
            .map(|u| {
                let mut nb: Vec<(usize, Mult)> =
                    (0..v).filter(|&w| w != u && adj[u][w] > 0).map(|w| (cells[w], adj[u][w])).collect();
                nb.sort_unstable();
                (cells[u], adj[u][u], nb)
            })
            .collect();
        let mut ranks: BTreeMap<&(usize, Mult, Vec<(usize, Mult)>), usize> = BTreeMap::new();
        for s in &sigs {
            ranks.insert(s, 0);
        }
        for (r, slot) in ranks.values_mut().enumerate() {
            *slot = r;
        }
        let next: Vec<usize> = sigs.iter().map(|s| ranks[s]).collect();
        let next_cells = ranks.len();
        cells = next;
        if next_cells == n_cells {
            return cells;
        }
        n_cells = next_cells;
    }
}

fn count_cells(cells: &[usize]) -> usize {
    let mut seen: Vec<usize> = cells.to_vec();
    seen.sort_unstable();
    seen.dedup();
    seen.len()
}

struct Search<'a> {
    adj: &'a [Vec<Mult>],
    twin: &'a [usize],
    best: Option<(Vec<Mult>, Vec<usize>)>,
    count: u64,
}

impl Search<'_> {
    fn descend(&mut self, cells: Vec<usize>, weight: u64) {
        let v = self.adj.len();
        let n_cells = count_cells(&cells);
        if n_cells == v {
            self.leaf(&cells, weight);
            return;
        }
        // first non-singleton cell in cell order
        let mut sizes = vec![0usize; v];
        for &c in &cells {
            sizes[c] += 1;
        }
        let target = (0..v).find(|&c| sizes[c] > 1).expect("partition is not discrete");
        let members: Vec<usize> = (0..v).filter(|&u| cells[u] == target).collect();
        let mut tried: BTreeMap<usize, u64> = BTreeMap::new();
        for &u in &members {
            *tried.entry(self.twin[u]).or_insert(0) += 1;
        }
        for (&rep, &mult) in &tried {
            let u = *members.iter().find(|&&x| self.twin[x] == rep).expect("member of its twin class");
            // individualise u: it gets a fresh cell placed just before the rest of `target`
            let split: Vec<usize> = cells
                .iter()
                .enumerate()
                .map(|(x, &c)| {
                    if c < target || (c == target && x == u) {
                        2 * c
                    } else {
                        2 * c + 1
                    }
                })
                .collect();
            let split = compact(&split);
            self.descend(refine(self.adj, split), weight * mult);
        }
    }

    fn leaf(&mut self, cells: &[usize], weight: u64) {
        let v = self.adj.len();
        let mut order = vec![0; v];
        for (u, &c) in cells.iter().enumerate() {
            order[c] = u;
        }
        // column-major upper triangle: (0,0) (0,1) (1,1) (0,2) ...
        let mut code = Vec::with_capacity(v * (v + 1) / 2);
        for b in 0..v {
            for a in 0..=b {
                code.push(self.adj[order[a]][order[b]]);
            }
        }
        match &self.best {
            Some((best, _)) if code > *best => {}
            Some((best, _)) if code == *best => self.count += weight,
            _ => {
                self.best = Some((code, order));
                self.count = weight;
            }
        }
    }
}

fn compact(labels: &[usize]) -> Vec<usize> {
    let mut sorted: Vec<usize> = labels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    labels.iter().map(|l| sorted.binary_search(l).expect("present")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::parse_edge_list;

    fn class(s: &str) -> MultigraphClass {
        canonicalize(&parse_edge_list(s).unwrap())
    }

    /// Counts automorphisms by trying every permutation.
    fn brute_aut(g: &ExponentVector) -> u64 {
        let verts = g.support_vertices();
        let k = verts.len();
        let mut perm: Vec<usize> = (0..k).collect();
        let mut count = 0;
        loop {
            let ok = g.edges().all(|(i, j, m)| {
                let pi = verts[perm[verts.iter().position(|&x| x == i).unwrap()]];
                let pj = verts[perm[verts.iter().position(|&x| x == j).unwrap()]];
                g.multiplicity(pi, pj) == m
            });
            if ok {
                count += 1;
            }
            if !next_permutation(&mut perm) {
                return count;
            }
        }
    }

    fn next_permutation(p: &mut [usize]) -> bool {
        if p.len() < 2 {
            return false;
        }
        let mut i = p.len() - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = p.len() - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }

    #[test]
    fn triangle_class() {
        let t = class("0-1 1-2 0-2");
        assert_eq!((t.v(), t.d(), t.aut_count()), (3, 3, 6));
        assert_eq!(class("4-5 5-6 4-6"), t);
    }

    #[test]
    fn isolated_vertex_removed() {
        let g = ExponentVector::from_edges(3, &[(1, 2, 1)]).unwrap();
        let c = canonicalize(&g);
        assert_eq!(c.v(), 2);
        assert_eq!(c, MultigraphClass::edge());
    }

    #[test]
    fn path_relabeling() {
        assert_eq!(class("0-1 1-2"), class("1-0 0-2"));
        assert_ne!(class("0-1 1-2"), class("0-1 2-3"));
    }

    #[test]
    fn automorphism_counts_match_brute_force() {
        for s in [
            "0-1 1-2 2-3 3-0",
            "0-1 0-2 0-3 0-4 0-5",
            "0-0 1-1",
            "0-0 0-1",
            "0-1*2 1-2 2-0",
            "0-1 1-2 2-3 3-4 4-5 5-0 0-3",
            "0-0*2 1-1*2 2-2",
            "0-1 2-3 4-5 0-0",
            "0-1 0-2 0-3 1-2 1-3 2-3",
        ] {
            let g = parse_edge_list(s).unwrap();
            assert_eq!(canonicalize(&g).aut_count(), brute_aut(&g), "{s}");
        }
    }

    #[test]
    fn large_star_is_fast() {
        let pairs: Vec<(usize, usize)> = (1..=12).map(|i| (0, i)).collect();
        let c = canonicalize(&ExponentVector::from_pairs(&pairs));
        assert_eq!(c.aut_count(), 479_001_600);
    }

    #[test]
    fn cycle_twelve() {
        let pairs: Vec<(usize, usize)> = (0..12).map(|i| (i, (i + 1) % 12)).collect();
        assert_eq!(canonicalize(&ExponentVector::from_pairs(&pairs)).aut_count(), 24);
    }

    #[test]
    fn idempotent() {
        let c = class("0-1*2 1-2 2-3 3-1 4-4");
        assert_eq!(canonicalize(&c.to_exponent_vector()), c);
    }
}
