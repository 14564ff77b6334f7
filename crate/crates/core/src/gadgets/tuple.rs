//! Tuple compression, multiset equality and multiset inclusion.

use std::collections::HashMap;

use super::{Challenge, Circuit, Role, Wire};
use crate::error::{Error, Result};

/// Witness rows, one `Vec` per tuple.
pub type Rows = Vec<Vec<u64>>;

/// Prover-chosen reorderings used by [`Circuit::multiset_incl`].
#[derive(Clone, Debug)]
pub struct InclusionWires {
    /// Sorted copy of the padded included multiset.
    pub x_sorted: Vec<Vec<Wire>>,
    /// Reordering of the padded table aligned with `x_sorted`.
    pub y_aligned: Vec<Vec<Wire>>,
}

/// Padded length `max(|X|, |Y| + 1)`: the table always keeps at least one pad row,
/// so pad rows of the included side can be aligned.
pub fn inclusion_len(x_len: usize, y_len: usize) -> usize {
    x_len.max(y_len + 1)
}

impl Circuit {
    /// `sum_i xs[i] * beta^i` by Horner's rule: `2L - 2` relations.
    pub fn compress(&mut self, xs: &[Wire], beta: Challenge) -> Result<Wire> {
        let (&last, rest) = xs.split_last().ok_or(Error::EmptyTuple)?;
        Ok(self.scope("compress", |c| rest.iter().rev().fold(last, |acc, &x| c.mul_add(acc, beta.wire(), x))))
    }

    /// `prod (alpha - x_i) == prod (alpha - y_i)`: `4L - 2` relations.
    pub fn set_eq(&mut self, xs: &[Wire], ys: &[Wire], alpha: Challenge) -> Result<()> {
        if xs.len() != ys.len() {
            return Err(Error::LengthMismatch { left: xs.len(), right: ys.len() });
        }
        if xs.is_empty() {
            return Ok(());
        }
        self.scope("set_eq", |c| {
            let product = |c: &mut Circuit, ws: &[Wire]| {
                let factors: Vec<Wire> = ws.iter().map(|&w| c.sub(alpha.wire(), w)).collect();
                factors[1..].iter().fold(factors[0], |acc, &f| c.mul(acc, f))
            };
            let px = product(c, xs);
            let py = product(c, ys);
            c.assert_eq(px, py);
        });
        Ok(())
    }

    /// Allocates the free reorderings for an inclusion of `x_len` rows into `y_len` rows.
    pub fn inclusion_wires(&mut self, x_len: usize, y_len: usize, width: usize) -> InclusionWires {
        let n = inclusion_len(x_len, y_len);
        let mut rows = || (0..n).map(|_| self.witnesses(Role::Free, width)).collect::<Vec<_>>();
        let x_sorted = rows();
        let y_aligned = rows();
        InclusionWires { x_sorted, y_aligned }
    }

    /// Multiset inclusion `X ⊆ Y` of equal-width rows. Both sides are padded with
    /// `pad`, whose key must not be below any key. Enforces
    ///
    /// * `X'' = X` and `Y'' = Y` as multisets of compressed rows;
    /// * `key(X'')` nondecreasing;
    /// * `x''_0 = y''_0` and `(x''_i - x''_{i-1})(x''_i - y''_i) = 0`.
    #[allow(clippy::too_many_arguments)]
    pub fn multiset_incl<K>(
        &mut self,
        x: &[Vec<Wire>],
        y: &[Vec<Wire>],
        pad: &[Wire],
        w: &InclusionWires,
        alpha: Challenge,
        beta: Challenge,
        mut key: K,
    ) -> Result<()>
    where
        K: FnMut(&mut Circuit, &[Wire]) -> Wire,
    {
        let n = inclusion_len(x.len(), y.len());
        if w.x_sorted.len() != n || w.y_aligned.len() != n {
            return Err(Error::LengthMismatch { left: w.x_sorted.len(), right: n });
        }
        self.scope("multiset_incl", |c| {
            let compress_padded = |c: &mut Circuit, rows: &[Vec<Wire>]| -> Result<Vec<Wire>> {
                let mut out = rows.iter().map(|r| c.compress(r, beta)).collect::<Result<Vec<_>>>()?;
                if out.len() < n {
                    let p = c.compress(pad, beta)?;
                    out.resize(n, p);
                }
                Ok(out)
            };
            let cx = compress_padded(c, x)?;
            let cy = compress_padded(c, y)?;
            let cxs = compress_padded(c, &w.x_sorted)?;
            let cys = compress_padded(c, &w.y_aligned)?;
            c.set_eq(&cx, &cxs, alpha)?;
            c.set_eq(&cy, &cys, alpha)?;
            let keys: Vec<Wire> = w.x_sorted.iter().map(|r| key(c, r)).collect();
            for i in 1..n {
                c.assert_le(keys[i - 1], keys[i]);
            }
            c.assert_eq(cxs[0], cys[0]);
            for i in 1..n {
                let step = c.sub(cxs[i], cxs[i - 1]);
                let gap = c.sub(cxs[i], cys[i]);
                let both = c.mul(step, gap);
                c.assert_zero(both);
            }
            Ok(())
        })
    }
}

/// Honest reorderings for an inclusion: `x` padded and sorted by `(key, row)`, and
/// `y` padded and arranged so that every first occurrence in the sorted `x` sits
/// above an equal row. Fails when `x` is not included in `y`.
pub fn inclusion_witness<K>(x: &[Vec<u64>], y: &[Vec<u64>], pad: &[u64], key: K) -> Result<(Rows, Rows)>
where
    K: Fn(&[u64]) -> u64,
{
    let n = inclusion_len(x.len(), y.len());
    let mut xs: Vec<Vec<u64>> = x.to_vec();
    xs.resize(n, pad.to_vec());
    xs.sort_by(|a, b| (key(a), a).cmp(&(key(b), b)));
    let mut ys: Vec<Vec<u64>> = y.to_vec();
    ys.resize(n, pad.to_vec());

    let mut pool: HashMap<&[u64], Vec<usize>> = HashMap::new();
    for (i, row) in ys.iter().enumerate().rev() {
        pool.entry(row.as_slice()).or_default().push(i);
    }
    let mut placed: Vec<Option<usize>> = vec![None; n];
    let mut used = vec![false; n];
    for i in 0..n {
        if i > 0 && xs[i] == xs[i - 1] {
            continue;
        }
        let j = pool
            .get_mut(xs[i].as_slice())
            .and_then(|v| v.pop())
            .ok_or_else(|| Error::WitnessInconsistent("included row is missing from the table".into()))?;
        placed[i] = Some(j);
        used[j] = true;
    }
    let mut rest = (0..n).filter(|&j| !used[j]);
    let aligned = placed
        .into_iter()
        .map(|p| ys[p.unwrap_or_else(|| rest.next().expect("one table row per position"))].clone())
        .collect();
    Ok((xs, aligned))
}

#[cfg(test)]
mod tests {
    use super::super::testing::satisfiable;
    use super::super::Assignment;
    use super::*;
    use crate::fixedpoint::FieldSpec;

    fn field() -> FieldSpec {
        FieldSpec::new(64, 16).unwrap()
    }

    #[test]
    fn compress_counts_and_values() {
        for len in 1..=64usize {
            let mut c = Circuit::new(field());
            let xs = c.witnesses(Role::Free, len);
            let (_, beta) = c.challenges();
            c.compress(&xs, beta).unwrap();
            assert_eq!(c.meter().class("compress").relations, 2 * len as u64 - 2);
        }
        let mut c = Circuit::new(field());
        let beta = Challenge(c.constant(10));
        let xs = [c.constant(2), c.constant(3), c.constant(5)];
        let out = c.compress(&xs, beta).unwrap();
        let want = c.constant(532);
        c.assert_eq(out, want);
        assert!(satisfiable(c, Assignment::new()));
        let mut c = Circuit::new(field());
        let beta = Challenge(c.constant(10));
        assert!(matches!(c.compress(&[], beta), Err(Error::EmptyTuple)));
    }

    fn set_eq_holds(x: &[u64], y: &[u64]) -> bool {
        let mut c = Circuit::new(field());
        let mut a = Assignment::new();
        let xw = c.witnesses(Role::Free, x.len());
        let yw = c.witnesses(Role::Free, y.len());
        a.set_all(&xw, x).unwrap();
        a.set_all(&yw, y).unwrap();
        let (alpha, _) = c.challenges();
        c.set_eq(&xw, &yw, alpha).unwrap();
        satisfiable(c, a)
    }

    #[test]
    fn set_eq_examples() {
        assert!(set_eq_holds(&[1, 2, 3], &[3, 1, 2]));
        assert!(set_eq_holds(&[4, 4, 9], &[4, 9, 4]));
        assert!(!set_eq_holds(&[1, 2, 3], &[1, 2, 2]));
        assert!(!set_eq_holds(&[1, 1, 2], &[1, 2, 2]));
        let mut c = Circuit::new(field());
        let xs = c.witnesses(Role::Free, 3);
        let ys = c.witnesses(Role::Free, 2);
        let (alpha, _) = c.challenges();
        assert!(matches!(c.set_eq(&xs, &ys, alpha), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn set_eq_counts() {
        for len in 1..=64usize {
            let mut c = Circuit::new(field());
            let xs = c.witnesses(Role::Free, len);
            let ys = c.witnesses(Role::Free, len);
            let (alpha, _) = c.challenges();
            c.set_eq(&xs, &ys, alpha).unwrap();
            assert_eq!(c.meter().class("set_eq").relations, 4 * len as u64 - 2);
        }
    }

    /// Scalar inclusion with an explicit (possibly dishonest) reordering.
    fn incl_holds(x: &[u64], y: &[u64], pad: u64, reorder: Option<(Vec<u64>, Vec<u64>)>) -> bool {
        let rows = |v: &[u64]| v.iter().map(|&e| vec![e]).collect::<Vec<_>>();
        let (xs, ys) = match reorder {
            Some(r) => r,
            None => match inclusion_witness(&rows(x), &rows(y), &[pad], |r| r[0]) {
                Ok((xs, ys)) => (xs.concat(), ys.concat()),
                Err(_) => {
                    let n = inclusion_len(x.len(), y.len());
                    let mut xs = x.to_vec();
                    xs.resize(n, pad);
                    xs.sort();
                    let mut ys = y.to_vec();
                    ys.resize(n, pad);
                    (xs, ys)
                }
            },
        };
        let mut c = Circuit::new(field());
        let mut a = Assignment::new();
        let xw: Vec<Vec<Wire>> = x.iter().map(|_| vec![c.witness(Role::Free)]).collect();
        let yw: Vec<Vec<Wire>> = y.iter().map(|_| vec![c.witness(Role::Bound)]).collect();
        a.set_all(&xw.concat(), x).unwrap();
        a.set_all(&yw.concat(), y).unwrap();
        let w = c.inclusion_wires(x.len(), y.len(), 1);
        a.set_all(&w.x_sorted.concat(), &xs).unwrap();
        a.set_all(&w.y_aligned.concat(), &ys).unwrap();
        let (alpha, beta) = c.challenges();
        let p = c.constant(pad);
        c.multiset_incl(&xw, &yw, &[p], &w, alpha, beta, |_, r| r[0]).unwrap();
        satisfiable(c, a)
    }

    #[test]
    fn inclusion_examples() {
        assert!(incl_holds(&[3, 1, 2], &[1, 2, 3], 99, None));
        assert!(incl_holds(&[2, 2, 5], &[2, 2, 3, 5], 99, None));
        assert!(incl_holds(&[5, 5, 5, 5, 5, 5], &[1, 5], 99, None));
        assert!(!incl_holds(&[4], &[2, 3], 99, None));
        assert!(!incl_holds(&[2, 4], &[2, 3, 5], 99, None));
    }

    #[test]
    fn inclusion_witness_shape() {
        let rows = |v: &[u64]| v.iter().map(|&e| vec![e]).collect::<Vec<_>>();
        let (xs, ys) = inclusion_witness(&rows(&[2, 2, 5]), &rows(&[2, 2, 3, 5]), &[9], |r| r[0]).unwrap();
        assert_eq!(xs.concat(), vec![2, 2, 5, 9, 9]);
        assert_eq!(ys[0], vec![2]);
        assert_eq!(ys[2], vec![5]);
        assert_eq!(ys[3], vec![9]);
        let mut all = ys.concat();
        all.sort();
        assert_eq!(all, vec![2, 2, 3, 5, 9]);
        assert!(inclusion_witness(&rows(&[4]), &rows(&[2, 3]), &[9], |r| r[0]).is_err());
    }

    #[test]
    fn unsorted_or_misaligned_reorderings_fail() {
        // Honest: X'' = (2, 5, 9), Y'' = (2, 5, 9).
        assert!(incl_holds(&[5, 2], &[2, 5], 9, Some((vec![2, 5, 9], vec![2, 5, 9]))));
        assert!(!incl_holds(&[5, 2], &[2, 5], 9, Some((vec![5, 2, 9], vec![5, 2, 9]))));
        assert!(!incl_holds(&[5, 2], &[2, 5], 9, Some((vec![2, 5, 9], vec![2, 9, 5]))));
        assert!(!incl_holds(&[5, 2], &[2, 5], 9, Some((vec![2, 2, 9], vec![2, 5, 9]))));
    }
}
