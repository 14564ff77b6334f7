//! Multiset design: the prover supplies sorted sequences and selected table
//! entries, and the circuit checks them with multiset equality, inclusion and
//! a linear number of comparisons.

use crate::config::CircuitShape;
use crate::error::{Error, Result};
use crate::gadgets::{inclusion_witness, Assignment, Challenge, Circuit, InclusionWires, Role, Wire};
use crate::semantics::adc_table;

use super::layout::CandidateWires;
use super::witness::WitnessBundle;

/// Prover-chosen columns; all of them enter the transcript.
pub(crate) struct MultisetWires {
    probe_sorted: Vec<[Wire; 2]>,
    selected: Vec<Wire>,
    inclusion: InclusionWires,
    topk_sorted: Vec<[Wire; 2]>,
}

fn pairs(c: &mut Circuit, n: usize) -> Vec<[Wire; 2]> {
    (0..n).map(|_| [c.witness(Role::Free), c.witness(Role::Free)]).collect()
}

/// Sort key of a table row: `g * K + code` for group `g = p * M + m`.
fn group_key(shape: &CircuitShape, probe: usize, m: usize) -> u64 {
    ((probe * shape.config.sub_quantizers + m) * shape.config.codebook_size) as u64
}

/// Pad row: key past every group, distance `d_max`.
fn pad_row(shape: &CircuitShape) -> [u64; 2] {
    [group_key(shape, shape.config.n_probe, 0), shape.field.d_max()]
}

impl MultisetWires {
    pub fn alloc(c: &mut Circuit, shape: &CircuitShape) -> Self {
        let cfg = &shape.config;
        let x_len = cfg.n_sel() * cfg.sub_quantizers;
        let y_len = cfg.n_probe * cfg.sub_quantizers * cfg.codebook_size;
        MultisetWires {
            probe_sorted: pairs(c, cfg.n_list),
            selected: c.witnesses(Role::Free, x_len),
            inclusion: c.inclusion_wires(x_len, y_len, 2),
            topk_sorted: pairs(c, cfg.n_sel()),
        }
    }

    /// The sorted `(index, distance)` sequence is a permutation of the computed one,
    /// its first `n_probe` distances are nondecreasing and no later distance is smaller.
    pub fn probe_select(
        &self,
        c: &mut Circuit,
        shape: &CircuitShape,
        distances: &[Wire],
        ch: (Challenge, Challenge),
    ) -> Result<Vec<Wire>> {
        let n_probe = shape.config.n_probe;
        let (alpha, beta) = ch;
        let orig = distances
            .iter()
            .enumerate()
            .map(|(i, &d)| {
                let idx = c.constant(i as u64);
                c.compress(&[idx, d], beta)
            })
            .collect::<Result<Vec<_>>>()?;
        let sorted = self.probe_sorted.iter().map(|p| c.compress(p, beta)).collect::<Result<Vec<_>>>()?;
        c.set_eq(&orig, &sorted, alpha)?;
        let d = |t: usize| self.probe_sorted[t][1];
        for t in 1..n_probe {
            c.assert_le(d(t - 1), d(t));
        }
        for t in n_probe..distances.len() {
            c.assert_le(d(n_probe - 1), d(t));
        }
        Ok(self.probe_sorted[..n_probe].iter().map(|p| p[0]).collect())
    }

    /// Every `(key, entry)` row of the candidates is included in the table rows.
    pub fn select_entries(
        &self,
        c: &mut Circuit,
        shape: &CircuitShape,
        tables: &[Vec<Vec<Wire>>],
        candidates: &[CandidateWires],
        ch: (Challenge, Challenge),
    ) -> Result<Vec<Vec<Wire>>> {
        let cfg = &shape.config;
        let m_count = cfg.sub_quantizers;
        let mut x = Vec::with_capacity(self.selected.len());
        let mut selected = Vec::with_capacity(candidates.len());
        for (idx, cand) in candidates.iter().enumerate() {
            let probe = idx / cfg.capacity;
            let entries = &self.selected[idx * m_count..(idx + 1) * m_count];
            for (m, (&v, &l)) in cand.codes.iter().zip(entries).enumerate() {
                let key = c.add_const(v, group_key(shape, probe, m));
                x.push(vec![key, l]);
            }
            selected.push(entries.to_vec());
        }
        let mut y = Vec::with_capacity(cfg.n_probe * m_count * cfg.codebook_size);
        for (p, table) in tables.iter().enumerate() {
            for (m, row) in table.iter().enumerate() {
                for (k, &entry) in row.iter().enumerate() {
                    let key = c.constant(group_key(shape, p, m) + k as u64);
                    y.push(vec![key, entry]);
                }
            }
        }
        let pad = pad_row(shape).map(|v| c.constant(v));
        c.multiset_incl(&x, &y, &pad, &self.inclusion, ch.0, ch.1, |_, row| row[0])?;
        Ok(selected)
    }

    /// The sorted `(item, distance)` sequence is a permutation of the candidates, its first
    /// `k` distances are nondecreasing, no later distance is smaller, and its first `k` items
    /// are the public ones.
    pub fn top_k(
        &self,
        c: &mut Circuit,
        shape: &CircuitShape,
        candidates: &[CandidateWires],
        distances: &[Wire],
        ch: (Challenge, Challenge),
    ) -> Result<Vec<Wire>> {
        let k = shape.config.top_k;
        let (alpha, beta) = ch;
        let orig = candidates
            .iter()
            .zip(distances)
            .map(|(cand, &d)| c.compress(&[cand.item, d], beta))
            .collect::<Result<Vec<_>>>()?;
        let sorted = self.topk_sorted.iter().map(|p| c.compress(p, beta)).collect::<Result<Vec<_>>>()?;
        c.set_eq(&orig, &sorted, alpha)?;
        let d = |t: usize| self.topk_sorted[t][1];
        for t in 1..k {
            c.assert_le(d(t - 1), d(t));
        }
        for t in k..distances.len() {
            c.assert_le(d(k - 1), d(t));
        }
        Ok(self.topk_sorted[..k].iter().map(|p| p[0]).collect())
    }

    pub fn assign(&self, a: &mut Assignment, w: &WitnessBundle, shape: &CircuitShape) -> Result<()> {
        let cfg = &shape.config;
        for (ws, &(i, d)) in self.probe_sorted.iter().zip(&w.probe_order) {
            a.set_all(ws, &[i as u64, d])?;
        }
        for (ws, &(item, d)) in self.topk_sorted.iter().zip(&w.candidate_order) {
            a.set_all(ws, &[item, d])?;
        }
        a.set_all(&self.selected, &w.selected)?;

        let mut x = Vec::with_capacity(w.selected.len());
        for (p, opening) in w.openings.iter().enumerate() {
            for (j, rec) in opening.records.iter().enumerate() {
                for (m, &v) in rec.code.iter().enumerate() {
                    let l = w.selected[(p * cfg.capacity + j) * cfg.sub_quantizers + m];
                    x.push(vec![group_key(shape, p, m) + v as u64, l]);
                }
            }
        }
        let mut y = Vec::new();
        for (p, opening) in w.openings.iter().enumerate() {
            let table =
                adc_table(w.public.q.coords(), opening.centroid.coords(), &w.codebooks, shape.residual_offset());
            for (mk, &entry) in table.iter().enumerate() {
                let (m, k) = (mk / cfg.codebook_size, mk % cfg.codebook_size);
                y.push(vec![group_key(shape, p, m) + k as u64, entry]);
            }
        }
        let (xs, ys) = inclusion_witness(&x, &y, &pad_row(shape), |r| r[0])
            .map_err(|_| Error::WitnessInconsistent("selected entries are not table entries".into()))?;
        for (ws, row) in self.inclusion.x_sorted.iter().zip(&xs) {
            a.set_all(ws, row)?;
        }
        for (ws, row) in self.inclusion.y_aligned.iter().zip(&ys) {
            a.set_all(ws, row)?;
        }
        Ok(())
    }
}
