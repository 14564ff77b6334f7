//! Circuit-only design: selection by compare-and-swap passes, table access by
//! indicator lookups.

use crate::config::CircuitShape;
use crate::gadgets::{Circuit, Sweep, Wire};

use super::layout::CandidateWires;

/// `n_probe` backward passes over `(distance, index)` rows; pass `p` fixes row `p`.
pub(crate) fn probe_select(c: &mut Circuit, shape: &CircuitShape, distances: &[Wire]) -> Vec<Wire> {
    let mut rows: Vec<Vec<Wire>> = distances.iter().enumerate().map(|(i, &d)| vec![d, c.constant(i as u64)]).collect();
    for _ in 0..shape.config.n_probe {
        c.bubble_pass(&mut rows, Sweep::Backward, |c, a, b| c.cmp_lt(a[0], b[0]));
    }
    rows[..shape.config.n_probe].iter().map(|r| r[1]).collect()
}

/// Selected table entries of every candidate, one lookup per sub-quantizer.
pub(crate) fn select_entries(
    c: &mut Circuit,
    tables: &[Vec<Vec<Wire>>],
    candidates: &[CandidateWires],
    capacity: usize,
) -> Vec<Vec<Wire>> {
    candidates
        .iter()
        .enumerate()
        .map(|(idx, cand)| {
            let table = &tables[idx / capacity];
            cand.codes.iter().enumerate().map(|(m, &v)| c.lookup(&table[m], v)).collect()
        })
        .collect()
}

/// `k` backward passes over `(distance, item)` rows ordered lexicographically.
pub(crate) fn top_k(
    c: &mut Circuit,
    shape: &CircuitShape,
    candidates: &[CandidateWires],
    distances: &[Wire],
) -> Vec<Wire> {
    let bits = c.field().t_cmp() as usize - 1;
    let mut rows: Vec<Vec<Wire>> = candidates
        .iter()
        .zip(distances)
        .map(|(cand, &d)| {
            c.range_check(cand.item, bits);
            vec![d, cand.item]
        })
        .collect();
    for _ in 0..shape.config.top_k {
        c.bubble_pass(&mut rows, Sweep::Backward, |c, a, b| c.lex_lt([a[0], a[1]], [b[0], b[1]]));
    }
    rows[..shape.config.top_k].iter().map(|r| r[1]).collect()
}
