//! Snapshot commitments: per-list Merkle trees under a Merkle tree of list entries,
//! plus a digest of the codebooks.
//!
//! * leaf `(i, j)`: `H_leaf(i, j, f, item, words)`, the code packed into words of
//!   `log2 K`-bit fields (see [`pack_codes`])
//! * list root: binary Merkle tree of the `n` leaves with `H_node(left || right)`
//! * list entry `i`: `H_entry(i, mu_i, root_i)`
//! * `root_mk`: binary Merkle tree over the `n_list` list entries
//! * `root_cb`: `H_codebook` over all codewords, by sub-quantizer, codeword, coordinate

use crate::error::{Error, Result};
use crate::fixedpoint::FxVector;
use crate::hash::{hash_node, hash_u64s, Digest, Domain};
use crate::shaping::{Codebooks, SlotRecord, Snapshot};

/// Public version identifier of a snapshot.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct Commitment {
    pub root_mk: Digest,
    pub root_cb: Digest,
}

impl Commitment {
    pub fn to_hex(&self) -> String {
        format!("{}:{}", self.root_mk.to_hex(), self.root_cb.to_hex())
    }
}

/// Everything needed to authenticate one probed list against `root_mk`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ListOpening {
    pub index: usize,
    pub centroid: FxVector,
    pub list_root: Digest,
    pub records: Vec<SlotRecord>,
    pub auth_path: Vec<Digest>,
}

impl ListOpening {
    /// Recomputes the list root from the records and opens it against `root_mk`.
    pub fn verify(&self, root_mk: &Digest, n_list: usize, codebook_size: usize) -> Result<bool> {
        let depth = n_list.trailing_zeros() as usize;
        if self.auth_path.len() != depth {
            return Err(Error::PathLengthMismatch { got: self.auth_path.len(), needed: depth, position: self.index });
        }
        let root = list_root(self.index, &self.records, codebook_size)?;
        if root != self.list_root {
            return Ok(false);
        }
        let entry = list_entry_hash(self.index, &self.centroid, &root);
        merkle_open_verify(&entry, self.index, &self.auth_path, root_mk)
    }
}

/// Bits of one packed code word. Splitting a word in-circuit both range-checks
/// every code field and recovers the codes.
pub const CODE_WORD_BITS: usize = 62;

/// Bits per code field, `log2 K`.
pub fn code_field_bits(codebook_size: usize) -> usize {
    codebook_size.trailing_zeros() as usize
}

/// Codes per packed word; zero when `K = 1` and codes carry no information.
pub fn codes_per_word(codebook_size: usize) -> usize {
    match code_field_bits(codebook_size) {
        0 => 0,
        b => CODE_WORD_BITS / b,
    }
}

/// Packs codes little-endian into words of `codes_per_word` fields each.
pub fn pack_codes(code: &[u32], codebook_size: usize) -> Vec<u64> {
    let per_word = codes_per_word(codebook_size);
    if per_word == 0 {
        return Vec::new();
    }
    let bits = code_field_bits(codebook_size);
    code.chunks(per_word).map(|chunk| chunk.iter().rev().fold(0u64, |acc, &v| (acc << bits) | v as u64)).collect()
}

/// Inverse of [`pack_codes`] for `count` codes.
pub fn unpack_codes(words: &[u64], count: usize, codebook_size: usize) -> Vec<u32> {
    let per_word = codes_per_word(codebook_size);
    if per_word == 0 {
        return vec![0; count];
    }
    let bits = code_field_bits(codebook_size);
    let mask = (1u64 << bits) - 1;
    (0..count).map(|m| ((words[m / per_word] >> (bits * (m % per_word))) & mask) as u32).collect()
}

/// Leaf preimage. Codes must be below `codebook_size`, a power of two.
pub fn leaf_input(i: usize, j: usize, rec: &SlotRecord, codebook_size: usize) -> Vec<u64> {
    let mut input = vec![i as u64, j as u64, rec.flag(), rec.item];
    input.extend(pack_codes(&rec.code, codebook_size));
    input
}

pub fn leaf_hash(i: usize, j: usize, rec: &SlotRecord, codebook_size: usize) -> Digest {
    hash_u64s(Domain::Leaf, &leaf_input(i, j, rec, codebook_size))
}

/// Merkle root of a power-of-two number of leaves.
pub fn merkle_root(leaves: &[Digest]) -> Result<Digest> {
    Ok(merkle_levels(leaves)?.pop().expect("at least one level")[0])
}

/// All tree levels, leaves first and the root level last.
fn merkle_levels(leaves: &[Digest]) -> Result<Vec<Vec<Digest>>> {
    if !leaves.len().is_power_of_two() {
        return Err(Error::NotPowerOfTwo { what: "leaf count", value: leaves.len() });
    }
    let mut levels = vec![leaves.to_vec()];
    while levels.last().unwrap().len() > 1 {
        let next = levels.last().unwrap().chunks(2).map(|p| hash_node(&p[0], &p[1])).collect();
        levels.push(next);
    }
    Ok(levels)
}

fn auth_path(levels: &[Vec<Digest>], mut position: usize) -> Vec<Digest> {
    let mut path = Vec::with_capacity(levels.len() - 1);
    for level in &levels[..levels.len() - 1] {
        path.push(level[position ^ 1]);
        position >>= 1;
    }
    path
}

pub fn list_root(i: usize, records: &[SlotRecord], codebook_size: usize) -> Result<Digest> {
    let leaves: Vec<Digest> = records.iter().enumerate().map(|(j, r)| leaf_hash(i, j, r, codebook_size)).collect();
    merkle_root(&leaves)
}

pub fn list_entry_input(i: usize, centroid: &FxVector, root: &Digest) -> Vec<u64> {
    let mut input = Vec::with_capacity(1 + centroid.dim() + 4);
    input.push(i as u64);
    input.extend_from_slice(centroid.coords());
    input.extend_from_slice(&root.0);
    input
}

pub fn list_entry_hash(i: usize, centroid: &FxVector, root: &Digest) -> Digest {
    hash_u64s(Domain::ListEntry, &list_entry_input(i, centroid, root))
}

pub fn codebook_digest(codebooks: &Codebooks) -> Digest {
    hash_u64s(Domain::Codebook, codebooks.flat())
}

/// Iteratively hashes `leaf` with `path`, choosing sides from the bits of `position`.
pub fn merkle_open(leaf: &Digest, mut position: usize, path: &[Digest]) -> Result<Digest> {
    if path.len() < usize::BITS as usize && position >> path.len() != 0 {
        return Err(Error::PathLengthMismatch {
            got: path.len(),
            needed: usize::BITS as usize - position.leading_zeros() as usize,
            position,
        });
    }
    let mut acc = *leaf;
    for sibling in path {
        acc = if position & 1 == 0 { hash_node(&acc, sibling) } else { hash_node(sibling, &acc) };
        position >>= 1;
    }
    Ok(acc)
}

pub fn merkle_open_verify(leaf: &Digest, position: usize, path: &[Digest], root: &Digest) -> Result<bool> {
    Ok(merkle_open(leaf, position, path)? == *root)
}

/// Commitment together with the intermediate digests needed for openings.
#[derive(Clone, Debug)]
pub struct CommitmentTree {
    pub commitment: Commitment,
    pub list_roots: Vec<Digest>,
    levels: Vec<Vec<Digest>>,
}

impl CommitmentTree {
    pub fn new(s: &Snapshot) -> Result<Self> {
        let list_roots = s
            .lists
            .iter()
            .enumerate()
            .map(|(i, l)| list_root(i, l, s.config.codebook_size))
            .collect::<Result<Vec<_>>>()?;
        let entries: Vec<Digest> =
            list_roots.iter().enumerate().map(|(i, r)| list_entry_hash(i, &s.centroids[i], r)).collect();
        let levels = merkle_levels(&entries)?;
        let commitment = Commitment { root_mk: levels.last().unwrap()[0], root_cb: codebook_digest(&s.codebooks) };
        Ok(CommitmentTree { commitment, list_roots, levels })
    }

    pub fn auth_path(&self, i: usize) -> Result<Vec<Digest>> {
        let n_list = self.list_roots.len();
        if i >= n_list {
            return Err(Error::IndexOutOfRange { index: i, len: n_list });
        }
        Ok(auth_path(&self.levels, i))
    }

    pub fn open(&self, s: &Snapshot, i: usize) -> Result<ListOpening> {
        let auth_path = self.auth_path(i)?;
        Ok(ListOpening {
            index: i,
            centroid: s.centroids[i].clone(),
            list_root: self.list_roots[i],
            records: s.lists[i].clone(),
            auth_path,
        })
    }
}

pub fn commit_snapshot(s: &Snapshot) -> Result<Commitment> {
    Ok(CommitmentTree::new(s)?.commitment)
}

pub fn open_list(s: &Snapshot, i: usize) -> Result<ListOpening> {
    CommitmentTree::new(s)?.open(s, i)
}
