use num_bigint::BigUint;

use super::{binomial, ExponentVector, Mult};
use crate::error::GraphError;

/// Default cap on `|α|` for sub-multigraph streams.
pub const SUBGRAPH_EDGE_LIMIT: u32 = 12;

/// Every `β <= α` exactly once, with multiplicity `binom(α, β)`.
///
/// Summing `f(β) * multiplicity` over the stream equals summing `f` over the
/// edge-labelled subgraphs of `α`. The stream has `∏ (α_e + 1)` items and
/// starts at `β = 0`.
pub fn sub_multigraphs(alpha: &ExponentVector) -> Result<SubMultigraphs, GraphError> {
    sub_multigraphs_with_limit(alpha, SUBGRAPH_EDGE_LIMIT)
}

pub fn sub_multigraphs_with_limit(alpha: &ExponentVector, limit: u32) -> Result<SubMultigraphs, GraphError> {
    let edges = alpha.total_degree();
    if edges > limit {
        return Err(GraphError::TooManyEdges { edges, limit });
    }
    let slots: Vec<(usize, usize, Mult)> = alpha.edges().collect();
    Ok(SubMultigraphs {
        n_vertices: alpha.n_vertices(),
        counter: vec![0; slots.len()],
        slots,
        done: false,
    })
}

/// Odometer over the componentwise sub-vectors of an exponent vector.
#[derive(Debug, Clone)]
pub struct SubMultigraphs {
    n_vertices: usize,
    slots: Vec<(usize, usize, Mult)>,
    counter: Vec<Mult>,
    done: bool,
}

impl SubMultigraphs {
    /// Total number of items, `∏ (α_e + 1)`.
    pub fn total(&self) -> u64 {
        self.slots.iter().map(|&(_, _, m)| u64::from(m) + 1).product()
    }
}

impl Iterator for SubMultigraphs {
    type Item = (ExponentVector, BigUint);

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut beta = ExponentVector::new(self.n_vertices);
        let mut mult = BigUint::from(1u32);
        for (&(i, j, m), &b) in self.slots.iter().zip(&self.counter) {
            if b > 0 {
                beta.add(i, j, b).expect("slot vertices are in range");
                mult *= binomial(m, b);
            }
        }
        // advance
        let mut pos = 0;
        loop {
            if pos == self.slots.len() {
                self.done = true;
                break;
            }
            if self.counter[pos] < self.slots[pos].2 {
                self.counter[pos] += 1;
                break;
            }
            self.counter[pos] = 0;
            pos += 1;
        }
        Some((beta, mult))
    }
}
