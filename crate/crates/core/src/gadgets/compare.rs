//! Range-bounded comparison and compare-and-swap networks.

use super::{Bit, Circuit, Wire};

/// Direction of one bubble pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sweep {
    /// Left to right; carries the largest row to the end.
    Forward,
    /// Right to left; carries the smallest row to the front, leftmost first on ties.
    Backward,
}

impl Circuit {
    /// `x < y` for `x, y` in `[0, 2^(t-1))`: decomposes `x - y + 2^(t-1)` into `t` bits
    /// and returns the negated top bit. Costs `4t + 1` relations.
    pub fn cmp_lt(&mut self, x: Wire, y: Wire) -> Bit {
        let t = self.field().t_cmp() as usize;
        self.scope("cmp_lt", |c| {
            let diff = c.sub(x, y);
            let shifted = c.add_const(diff, 1u64 << (t - 1));
            let bits = c.split_bits(shifted, t);
            c.not(bits[t - 1])
        })
    }

    /// Constrains `x <= y`.
    pub fn assert_le(&mut self, x: Wire, y: Wire) {
        let gt = self.cmp_lt(y, x);
        self.assert_zero(gt.wire());
    }

    /// `(a0, a1) < (b0, b1)` lexicographically.
    pub fn lex_lt(&mut self, a: [Wire; 2], b: [Wire; 2]) -> Bit {
        let lt0 = self.cmp_lt(a[0], b[0]);
        let eq0 = self.is_equal(a[0], b[0]);
        let lt1 = self.cmp_lt(a[1], b[1]);
        // The two summands are never both one.
        let w = self.mul_add(eq0.wire(), lt1.wire(), lt0.wire());
        Bit(plonky2::iop::target::BoolTarget::new_unsafe(w.0))
    }

    /// One compare-and-swap pass over adjacent rows. `less(a, b)` decides whether row
    /// `a` must precede row `b`; rows are swapped only on strict inversions, and every
    /// column of a row moves with it.
    pub fn bubble_pass<L>(&mut self, rows: &mut [Vec<Wire>], sweep: Sweep, mut less: L)
    where
        L: FnMut(&mut Circuit, &[Wire], &[Wire]) -> Bit,
    {
        if rows.len() < 2 {
            return;
        }
        self.scope("bubble_pass", |c| {
            let pairs: Vec<usize> = match sweep {
                Sweep::Forward => (0..rows.len() - 1).collect(),
                Sweep::Backward => (0..rows.len() - 1).rev().collect(),
            };
            for j in pairs {
                let swap = less(c, &rows[j + 1], &rows[j]);
                let (lo, hi) = rows.split_at_mut(j + 1);
                let (a, b) = (&mut lo[j], &mut hi[0]);
                for col in 0..a.len() {
                    let first = c.select(swap, b[col], a[col]);
                    let second = c.select(swap, a[col], b[col]);
                    a[col] = first;
                    b[col] = second;
                }
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::satisfiable;
    use super::super::{Assignment, Role};
    use super::*;
    use crate::fixedpoint::FieldSpec;
    use proptest::prelude::*;

    fn field(t: u32) -> FieldSpec {
        FieldSpec::new(64, t).unwrap()
    }

    /// Builds `cmp_lt(x, y) == expected` and reports satisfiability.
    fn cmp_holds(t: u32, x: u64, y: u64, expected: u64) -> bool {
        let mut c = Circuit::new(field(t));
        let (xw, yw) = (c.witness(Role::Bound), c.witness(Role::Bound));
        let out = c.cmp_lt(xw, yw);
        let e = c.constant(expected);
        c.assert_eq(out.wire(), e);
        let mut a = Assignment::new();
        a.set(xw, x).unwrap();
        a.set(yw, y).unwrap();
        satisfiable(c, a)
    }

    #[test]
    fn cmp_examples() {
        assert!(cmp_holds(8, 3, 5, 1));
        assert!(!cmp_holds(8, 3, 5, 0));
        assert!(cmp_holds(8, 5, 5, 0));
        assert!(cmp_holds(8, 5, 3, 0));
        assert!(cmp_holds(8, 127, 0, 0));
        assert!(cmp_holds(8, 0, 127, 1));
    }

    #[test]
    fn cmp_cost() {
        let mut c = Circuit::new(FieldSpec::goldilocks());
        let (x, y) = (c.witness(Role::Bound), c.witness(Role::Bound));
        c.cmp_lt(x, y);
        assert_eq!(c.meter().class("cmp_lt").relations, 4 * 48 + 1);
    }

    #[test]
    fn out_of_range_inputs_have_no_witness() {
        // x - y + 128 = 256 needs nine bits.
        assert!(!cmp_holds(8, 128, 0, 0));
        assert!(!cmp_holds(8, 128, 0, 1));
    }

    fn run_pass(keys: &[u64], sweep: Sweep, expect: &[u64]) -> bool {
        let mut c = Circuit::new(field(16));
        let mut a = Assignment::new();
        let mut rows: Vec<Vec<Wire>> = keys
            .iter()
            .enumerate()
            .map(|(i, &k)| {
                let kw = c.witness(Role::Bound);
                a.set(kw, k).unwrap();
                let tag = c.constant(i as u64);
                vec![kw, tag]
            })
            .collect();
        c.bubble_pass(&mut rows, sweep, |c, x, y| c.cmp_lt(x[0], y[0]));
        for (row, &e) in rows.iter().zip(expect) {
            let ew = c.constant(e);
            c.assert_eq(row[0], ew);
        }
        satisfiable(c, a)
    }

    #[test]
    fn bubble_pass_examples() {
        assert!(run_pass(&[3, 1, 2], Sweep::Forward, &[1, 2, 3]));
        assert!(run_pass(&[1, 2, 3], Sweep::Forward, &[1, 2, 3]));
        assert!(run_pass(&[3, 1, 2], Sweep::Backward, &[1, 3, 2]));
        assert!(!run_pass(&[3, 1, 2], Sweep::Backward, &[1, 2, 3]));
    }

    #[test]
    fn lex_lt_orders_pairs() {
        for (a, b, want) in [([1, 9], [2, 0], 1), ([2, 0], [1, 9], 0), ([2, 3], [2, 4], 1), ([2, 4], [2, 4], 0)] {
            let mut c = Circuit::new(field(16));
            let aw = [c.constant(a[0]), c.constant(a[1])];
            let bw = [c.constant(b[0]), c.constant(b[1])];
            let out = c.lex_lt(aw, bw);
            let e = c.constant(want);
            c.assert_eq(out.wire(), e);
            assert!(satisfiable(c, Assignment::new()), "{a:?} {b:?}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn cmp_matches_integers(x in 0u64..1 << 15, y in 0u64..1 << 15) {
            prop_assert!(cmp_holds(16, x, y, (x < y) as u64));
        }

        #[test]
        fn backward_passes_select_stably(keys in proptest::collection::vec(0u64..4, 2..7)) {
            // After p backward passes the first p rows are the p smallest, by (key, index).
            let mut c = Circuit::new(field(16));
            let mut rows: Vec<Vec<Wire>> =
                keys.iter().enumerate().map(|(i, &k)| vec![c.constant(k), c.constant(i as u64)]).collect();
            let passes = keys.len() / 2;
            for _ in 0..passes {
                c.bubble_pass(&mut rows, Sweep::Backward, |c, x, y| c.cmp_lt(x[0], y[0]));
            }
            let mut sorted: Vec<(u64, u64)> = keys.iter().enumerate().map(|(i, &k)| (k, i as u64)).collect();
            sorted.sort();
            for (row, &(k, i)) in rows.iter().zip(&sorted).take(passes) {
                let (kw, iw) = (c.constant(k), c.constant(i));
                c.assert_eq(row[0], kw);
                c.assert_eq(row[1], iw);
            }
            prop_assert!(satisfiable(c, Assignment::new()));
        }
    }
}
