//! Random snapshots and queries for tests and benchmarks.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::IvfPqConfig;
use crate::fixedpoint::{FieldSpec, FxScale, FxVector};
use crate::shaping::{Codebooks, SlotRecord, Snapshot};

/// Scale used by random fixtures: 8-bit unsigned coordinates.
pub const FIXTURE_BITS: u32 = 8;

/// A configuration with half the slots filled, `n_probe = 1` and `k = 1`.
pub fn small_config(
    n_list: usize,
    capacity: usize,
    dim: usize,
    sub_quantizers: usize,
    codebook_size: usize,
) -> IvfPqConfig {
    IvfPqConfig {
        n0: (n_list * capacity / 2).max(1),
        dim,
        n_list,
        n_probe: 1,
        capacity,
        sub_quantizers,
        codebook_size,
        top_k: 1,
    }
}

pub fn fixture_scale() -> FxScale {
    FxScale::new(FIXTURE_BITS, 1.0, false).expect("valid scale")
}

/// A structurally valid snapshot with uniformly random contents.
///
/// Valid slots are scattered over all lists and carry distinct random items.
pub fn random_snapshot(seed: u64, config: IvfPqConfig) -> Snapshot {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_snapshot_with(&mut rng, config)
}

pub fn random_snapshot_with<R: Rng>(rng: &mut R, config: IvfPqConfig) -> Snapshot {
    let scale = fixture_scale();
    let coord_max = scale.coord_max();
    let centroids = (0..config.n_list).map(|_| random_vector(rng, config.dim, coord_max)).collect();
    let slots = sample(rng, config.total_slots(), config.n0);
    let items = sample(rng, 1 << 20, config.n0);
    let mut lists = vec![vec![SlotRecord::padding(config.sub_quantizers); config.capacity]; config.n_list];
    for (slot, item) in slots.iter().zip(items.iter()) {
        lists[slot / config.capacity][slot % config.capacity] = SlotRecord {
            valid: true,
            item: item as u64 + 1,
            code: (0..config.sub_quantizers).map(|_| rng.gen_range(0..config.codebook_size as u32)).collect(),
        };
    }
    let words = (0..config.sub_quantizers * config.codebook_size * config.sub_dim())
        .map(|_| rng.gen_range(0..=2 * coord_max))
        .collect();
    let codebooks = Codebooks::new(config.sub_quantizers, config.codebook_size, config.sub_dim(), words)
        .expect("consistent codebook shape");
    let s = Snapshot { config, field: FieldSpec::goldilocks(), scale, centroids, lists, codebooks };
    debug_assert!(s.validate().is_ok());
    s
}

pub fn random_vector<R: Rng>(rng: &mut R, dim: usize, coord_max: u64) -> FxVector {
    FxVector::from_coords((0..dim).map(|_| rng.gen_range(0..=coord_max)).collect())
}

/// A random query in range for `s`.
pub fn random_query<R: Rng>(rng: &mut R, s: &Snapshot) -> FxVector {
    random_vector(rng, s.config.dim, s.scale.coord_max())
}
