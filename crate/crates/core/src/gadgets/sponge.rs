//! In-circuit twin of [`crate::hash`]: the same sponge schedule and Merkle rules.

use plonky2::hash::hashing::PlonkyPermutation;
use plonky2::hash::poseidon::{PoseidonHash, PoseidonPermutation};
use plonky2::iop::target::Target;

use super::{Bit, Circuit, Wire};
use crate::hash::{Domain, DIGEST_LEN, RATE, WIDTH};

/// Four wires holding a digest.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DigestWires(pub [Wire; DIGEST_LEN]);

impl DigestWires {
    pub fn wires(&self) -> &[Wire] {
        &self.0
    }
}

impl Circuit {
    fn permute(&mut self, state: [Target; WIDTH]) -> [Target; WIDTH] {
        self.charge(1);
        let out = self.builder().permute::<PoseidonHash>(PoseidonPermutation::new(state));
        let mut next = [state[0]; WIDTH];
        next.copy_from_slice(out.as_ref());
        next
    }

    pub fn hash(&mut self, domain: Domain, input: &[Wire]) -> DigestWires {
        self.scope("poseidon", |c| {
            let zero = c.zero().0;
            let mut state = [zero; WIDTH];
            state[RATE] = c.constant(domain as u64).0;
            state[RATE + 1] = c.constant(input.len() as u64).0;
            if input.is_empty() {
                state = c.permute(state);
            }
            for chunk in input.chunks(RATE) {
                for (s, w) in state.iter_mut().zip(chunk) {
                    *s = w.0;
                }
                state = c.permute(state);
            }
            DigestWires([0, 1, 2, 3].map(|i| Wire(state[i])))
        })
    }

    pub fn hash_node(&mut self, left: &DigestWires, right: &DigestWires) -> DigestWires {
        let mut input = left.0.to_vec();
        input.extend_from_slice(&right.0);
        self.hash(Domain::Node, &input)
    }

    /// Root of a power-of-two number of leaf digests.
    pub fn merkle_root(&mut self, leaves: &[DigestWires]) -> DigestWires {
        assert!(leaves.len().is_power_of_two(), "leaf count must be a power of two");
        self.scope("merkle_root", |c| {
            let mut level = leaves.to_vec();
            while level.len() > 1 {
                level = level.chunks(2).map(|p| c.hash_node(&p[0], &p[1])).collect();
            }
            level[0]
        })
    }

    /// Hashes `leaf` up `path`; bit `b` of the position puts the running digest on the right.
    pub fn merkle_open(&mut self, leaf: &DigestWires, position: &[Bit], path: &[DigestWires]) -> DigestWires {
        assert_eq!(position.len(), path.len(), "one position bit per level");
        self.scope("merkle_open", |c| {
            let mut acc = *leaf;
            for (&bit, sibling) in position.iter().zip(path) {
                let mut left = acc;
                let mut right = *sibling;
                for e in 0..DIGEST_LEN {
                    left.0[e] = c.select(bit, sibling.0[e], acc.0[e]);
                    right.0[e] = c.select(bit, acc.0[e], sibling.0[e]);
                }
                acc = c.hash_node(&left, &right);
            }
            acc
        })
    }

    pub fn assert_digest_eq(&mut self, a: &DigestWires, b: &DigestWires) {
        for (&x, &y) in a.0.iter().zip(&b.0) {
            self.assert_eq(x, y);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::satisfiable;
    use super::super::{Assignment, Role};
    use super::*;
    use crate::commitment::{merkle_open, merkle_root};
    use crate::fixedpoint::FieldSpec;
    use crate::hash::{hash_u64s, Digest};

    fn digest_wires(c: &mut Circuit, a: &mut Assignment, d: &Digest) -> DigestWires {
        let w = DigestWires([(); 4].map(|_| c.witness(Role::Bound)));
        a.set_digest(&w, d).unwrap();
        w
    }

    #[test]
    fn sponge_matches_native_hash() {
        for len in [0usize, 1, 7, 8, 9, 17] {
            let input: Vec<u64> = (0..len as u64).map(|x| x * 31 + 5).collect();
            let want = hash_u64s(Domain::Codebook, &input);
            let mut c = Circuit::new(FieldSpec::goldilocks());
            let mut a = Assignment::new();
            let ws = c.witnesses(Role::Bound, len);
            a.set_all(&ws, &input).unwrap();
            let got = c.hash(Domain::Codebook, &ws);
            let expect = digest_wires(&mut c, &mut a, &want);
            c.assert_digest_eq(&got, &expect);
            assert_eq!(c.meter().class("poseidon").relations, len.div_ceil(RATE).max(1) as u64);
            assert!(satisfiable(c, a), "len {len}");
        }
    }

    #[test]
    fn merkle_gadgets_match_native() {
        let leaves: Vec<Digest> = (0..8).map(|j| hash_u64s(Domain::Leaf, &[j])).collect();
        let root = merkle_root(&leaves).unwrap();
        for pos in [0usize, 5, 7] {
            let mut c = Circuit::new(FieldSpec::goldilocks());
            let mut a = Assignment::new();
            let lw: Vec<DigestWires> = leaves.iter().map(|d| digest_wires(&mut c, &mut a, d)).collect();
            let rw = digest_wires(&mut c, &mut a, &root);
            let r = c.merkle_root(&lw);
            c.assert_digest_eq(&r, &rw);
            let idx = c.witness(Role::Free);
            a.set(idx, pos as u64).unwrap();
            let bits = c.split_bits(idx, 3);
            let path: Vec<Digest> = (0..3)
                .map(|l| {
                    let sib = (pos >> l) ^ 1;
                    let lo = sib << l;
                    merkle_root(&leaves[lo..lo + (1 << l)]).unwrap()
                })
                .collect();
            assert_eq!(merkle_open(&leaves[pos], pos, &path).unwrap(), root);
            let pw: Vec<DigestWires> = path.iter().map(|d| digest_wires(&mut c, &mut a, d)).collect();
            let opened = c.merkle_open(&lw[pos], &bits, &pw);
            c.assert_digest_eq(&opened, &rw);
            assert!(satisfiable(c, a), "position {pos}");
        }
    }

    #[test]
    fn wrong_position_fails() {
        let leaves: Vec<Digest> = (0..2).map(|j| hash_u64s(Domain::Leaf, &[j])).collect();
        let root = merkle_root(&leaves).unwrap();
        let mut c = Circuit::new(FieldSpec::goldilocks());
        let mut a = Assignment::new();
        let leaf = digest_wires(&mut c, &mut a, &leaves[0]);
        let sib = digest_wires(&mut c, &mut a, &leaves[1]);
        let rw = digest_wires(&mut c, &mut a, &root);
        let idx = c.witness(Role::Free);
        a.set(idx, 1).unwrap();
        let bits = c.split_bits(idx, 1);
        let opened = c.merkle_open(&leaf, &bits, &[sib]);
        c.assert_digest_eq(&opened, &rw);
        assert!(!satisfiable(c, a));
    }
}
