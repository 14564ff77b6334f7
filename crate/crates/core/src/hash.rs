//! Domain-separated Poseidon sponge over Goldilocks.
//!
//! Absorption schedule, shared bit-for-bit with the in-circuit gadget:
//!
//! * the 12-element state starts at zero, except `state[8] = tag` and
//!   `state[9] = input length`;
//! * the input is split into chunks of 8; each chunk overwrites
//!   `state[0..len]` and is followed by one permutation;
//! * an empty input is absorbed with a single permutation;
//! * the digest is `state[0..4]`.
//!
//! The tag and length live in the capacity, so distinct roles and lengths never
//! collide. A Merkle node hashes `left || right`, which is exactly one chunk.

use plonky2::field::goldilocks_field::GoldilocksField;
use plonky2::field::types::{Field, Field64, PrimeField64};
use plonky2::hash::poseidon::Poseidon;

pub type F = GoldilocksField;

pub const RATE: usize = 8;
pub const WIDTH: usize = 12;
pub const DIGEST_LEN: usize = 4;

/// Domain tags for each hash role.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Leaf = 1,
    Node = 2,
    ListEntry = 3,
    Codebook = 4,
    Transcript = 5,
}

/// A four-element Poseidon digest.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest(pub [u64; DIGEST_LEN]);

impl Digest {
    pub const BYTES: usize = 8 * DIGEST_LEN;

    pub fn to_bytes(&self) -> [u8; Self::BYTES] {
        let mut out = [0u8; Self::BYTES];
        for (chunk, limb) in out.chunks_exact_mut(8).zip(self.0) {
            chunk.copy_from_slice(&limb.to_le_bytes());
        }
        out
    }

    /// Parses 32 little-endian bytes; every limb must be a canonical field element.
    pub fn from_bytes(bytes: &[u8]) -> Option<Self> {
        if bytes.len() != Self::BYTES {
            return None;
        }
        let mut limbs = [0u64; DIGEST_LEN];
        for (limb, chunk) in limbs.iter_mut().zip(bytes.chunks_exact(8)) {
            *limb = u64::from_le_bytes(chunk.try_into().ok()?);
            if *limb >= F::ORDER {
                return None;
            }
        }
        Some(Digest(limbs))
    }

    pub fn elements(&self) -> [F; DIGEST_LEN] {
        self.0.map(F::from_canonical_u64)
    }

    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Reduces an arbitrary `u64` into the field.
pub fn felt(x: u64) -> F {
    F::from_noncanonical_u64(x)
}

pub fn hash_elements(domain: Domain, input: &[F]) -> Digest {
    let mut state = [F::ZERO; WIDTH];
    state[RATE] = F::from_canonical_u64(domain as u64);
    state[RATE + 1] = F::from_canonical_u64(input.len() as u64);
    if input.is_empty() {
        state = F::poseidon(state);
    }
    for chunk in input.chunks(RATE) {
        state[..chunk.len()].copy_from_slice(chunk);
        state = F::poseidon(state);
    }
    Digest([0, 1, 2, 3].map(|i| state[i].to_canonical_u64()))
}

pub fn hash_u64s(domain: Domain, input: &[u64]) -> Digest {
    let felts: Vec<F> = input.iter().map(|&x| felt(x)).collect();
    hash_elements(domain, &felts)
}

pub fn hash_node(left: &Digest, right: &Digest) -> Digest {
    let mut input = [F::ZERO; 2 * DIGEST_LEN];
    input[..DIGEST_LEN].copy_from_slice(&left.elements());
    input[DIGEST_LEN..].copy_from_slice(&right.elements());
    hash_elements(Domain::Node, &input)
}
