//! Building fixed-shape IVF-PQ snapshots from raw vectors.

mod kmeans;
mod rebalance;

use std::collections::HashSet;

pub use kmeans::{lloyd, nearest, DEFAULT_ITERATIONS};
pub use rebalance::{rebalance, RebalanceReport};

use crate::config::{CircuitShape, IvfPqConfig};
use crate::error::{Error, Result};
use crate::fixedpoint::{FieldSpec, FxScale, FxVector};

/// One padded inverted-list slot.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SlotRecord {
    pub valid: bool,
    pub item: u64,
    pub code: Vec<u32>,
}

impl SlotRecord {
    /// Canonical padding: invalid, item 0, all-zero code.
    pub fn padding(sub_quantizers: usize) -> Self {
        SlotRecord { valid: false, item: 0, code: vec![0; sub_quantizers] }
    }

    pub fn flag(&self) -> u64 {
        self.valid as u64
    }
}

/// `M` codebooks of `K` codewords of dimension `d`, stored flat by `m`, then `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Codebooks {
    sub_quantizers: usize,
    codebook_size: usize,
    sub_dim: usize,
    words: Vec<u64>,
}

impl Codebooks {
    pub fn new(sub_quantizers: usize, codebook_size: usize, sub_dim: usize, words: Vec<u64>) -> Result<Self> {
        let expected = sub_quantizers * codebook_size * sub_dim;
        if words.len() != expected {
            return Err(Error::LengthMismatch { left: words.len(), right: expected });
        }
        Ok(Codebooks { sub_quantizers, codebook_size, sub_dim, words })
    }

    pub fn sub_quantizers(&self) -> usize {
        self.sub_quantizers
    }

    pub fn codebook_size(&self) -> usize {
        self.codebook_size
    }

    pub fn sub_dim(&self) -> usize {
        self.sub_dim
    }

    pub fn word(&self, m: usize, k: usize) -> &[u64] {
        let start = (m * self.codebook_size + k) * self.sub_dim;
        &self.words[start..start + self.sub_dim]
    }

    pub fn word_mut(&mut self, m: usize, k: usize) -> &mut [u64] {
        let start = (m * self.codebook_size + k) * self.sub_dim;
        &mut self.words[start..start + self.sub_dim]
    }

    #[cfg(test)]
    pub(crate) fn flat_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }

    /// Flattened codewords in commitment order.
    pub fn flat(&self) -> &[u64] {
        &self.words
    }
}

/// A committed unit: centroids, padded lists and codebooks under one configuration.
#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub config: IvfPqConfig,
    pub field: FieldSpec,
    pub scale: FxScale,
    pub centroids: Vec<FxVector>,
    pub lists: Vec<Vec<SlotRecord>>,
    pub codebooks: Codebooks,
}

impl Snapshot {
    pub fn shape(&self) -> Result<CircuitShape> {
        CircuitShape::from_scale(self.config, self.field, &self.scale)
    }

    pub fn valid_count(&self) -> usize {
        self.lists.iter().flatten().filter(|r| r.valid).count()
    }

    /// Checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        let shape = self.shape()?;
        let malformed = |reason: String| Err(Error::malformed("snapshot", reason));
        if self.centroids.len() != c.n_list || self.lists.len() != c.n_list {
            return malformed(format!("expected {} centroids and lists", c.n_list));
        }
        for mu in &self.centroids {
            if mu.dim() != c.dim {
                return Err(Error::DimensionMismatch { expected: c.dim, got: mu.dim() });
            }
            if mu.max_coord() > shape.coord_max {
                return malformed("centroid coordinate exceeds the scale".into());
            }
        }
        let cb = &self.codebooks;
        if (cb.sub_quantizers, cb.codebook_size, cb.sub_dim) != (c.sub_quantizers, c.codebook_size, c.sub_dim()) {
            return malformed("codebook shape does not match the configuration".into());
        }
        if cb.words.iter().any(|&w| w > 2 * shape.residual_offset()) {
            return malformed("codeword outside the residual range".into());
        }
        let mut items = HashSet::new();
        for list in &self.lists {
            if list.len() != c.capacity {
                return malformed(format!("list has {} slots, expected {}", list.len(), c.capacity));
            }
            for r in list {
                if r.code.len() != c.sub_quantizers || r.code.iter().any(|&v| v as usize >= c.codebook_size) {
                    return malformed("record code has the wrong length or range".into());
                }
                if !r.valid {
                    if r.item != 0 || r.code.iter().any(|&v| v != 0) {
                        return malformed("padding slot is not canonical".into());
                    }
                    continue;
                }
                if r.item >= self.field.cmp_bound() {
                    return Err(Error::ItemOutOfRange { item: r.item, bits: self.field.t_cmp() - 1 });
                }
                if !items.insert(r.item) {
                    return Err(Error::DuplicateItem(r.item));
                }
            }
        }
        if items.len() != c.n0 {
            return malformed(format!("{} valid slots, expected {}", items.len(), c.n0));
        }
        Ok(())
    }
}

/// Valid slot contents before PQ encoding: the original vector index.
pub type SlotStub = Option<usize>;

pub fn train_centroids(vectors: &[FxVector], n_list: usize, seed: u64) -> Result<Vec<FxVector>> {
    let points: Vec<&[u64]> = vectors.iter().map(FxVector::coords).collect();
    let cs = lloyd(&points, n_list, seed, DEFAULT_ITERATIONS)?;
    Ok(cs.into_iter().map(FxVector::from_coords).collect())
}

/// Nearest-centroid partition; each cluster lists vector indices in ascending order.
pub fn assign(vectors: &[FxVector], centroids: &[FxVector]) -> Result<Vec<Vec<usize>>> {
    let dim = centroids.first().map(FxVector::dim).ok_or(Error::TooFewVectors { needed: 1, got: 0 })?;
    let mut clusters = vec![Vec::new(); centroids.len()];
    let cs: Vec<&[u64]> = centroids.iter().map(FxVector::coords).collect();
    for (idx, v) in vectors.iter().enumerate() {
        if v.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: v.dim() });
        }
        clusters[nearest(v.coords(), &cs)].push(idx);
    }
    Ok(clusters)
}

/// Lays each cluster out as `capacity` slots: members in ascending index order, then padding.
pub fn pad_lists(clusters: &[Vec<usize>], capacity: usize) -> Result<Vec<Vec<SlotStub>>> {
    clusters
        .iter()
        .map(|c| {
            if c.len() > capacity {
                return Err(Error::InfeasibleCapacity { n0: c.len(), n_list: 1, capacity });
            }
            let mut members = c.clone();
            members.sort_unstable();
            let mut slots: Vec<SlotStub> = members.into_iter().map(Some).collect();
            slots.resize(capacity, None);
            Ok(slots)
        })
        .collect()
}

/// Residual `v - mu + R`, nonnegative for in-range inputs.
pub fn residual(v: &FxVector, mu: &FxVector, offset: u64) -> Vec<u64> {
    v.coords().iter().zip(mu.coords()).map(|(&x, &m)| x + offset - m).collect()
}

/// Trains one `K`-word codebook per sub-block of the residuals.
pub fn train_pq(residuals: &[Vec<u64>], sub_quantizers: usize, codebook_size: usize, seed: u64) -> Result<Codebooks> {
    let dim = residuals.first().map(Vec::len).ok_or(Error::TooFewVectors { needed: codebook_size, got: 0 })?;
    if dim % sub_quantizers != 0 {
        return Err(Error::InvalidConfig(format!("D = {dim} is not a multiple of M = {sub_quantizers}")));
    }
    let sub_dim = dim / sub_quantizers;
    let mut words = Vec::with_capacity(sub_quantizers * codebook_size * sub_dim);
    for m in 0..sub_quantizers {
        let blocks: Vec<&[u64]> = residuals.iter().map(|r| &r[m * sub_dim..(m + 1) * sub_dim]).collect();
        let seed_m = seed ^ (m as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15);
        for w in lloyd(&blocks, codebook_size, seed_m, DEFAULT_ITERATIONS)? {
            words.extend(w);
        }
    }
    Codebooks::new(sub_quantizers, codebook_size, sub_dim, words)
}

/// Nearest codeword per sub-block, ties to the smallest index.
pub fn encode_pq(residual: &[u64], codebooks: &Codebooks) -> Vec<u32> {
    let d = codebooks.sub_dim;
    (0..codebooks.sub_quantizers)
        .map(|m| {
            let words: Vec<&[u64]> = (0..codebooks.codebook_size).map(|k| codebooks.word(m, k)).collect();
            nearest(&residual[m * d..(m + 1) * d], &words) as u32
        })
        .collect()
}

/// Shapes `vectors` into a snapshot: centroids, assignment, rebalancing, padding and PQ.
///
/// `items[t]` is the payload identifier of `vectors[t]`.
pub fn build_snapshot(
    vectors: &[FxVector],
    items: &[u64],
    config: IvfPqConfig,
    field: FieldSpec,
    scale: FxScale,
    seed: u64,
) -> Result<(Snapshot, RebalanceReport)> {
    let shape = CircuitShape::from_scale(config, field, &scale)?;
    check_inputs(vectors, items, &config, &field, shape.coord_max)?;

    let centroids = train_centroids(vectors, config.n_list, seed)?;
    let clusters = assign(vectors, &centroids)?;
    let (clusters, report) = rebalance(&clusters, vectors, &centroids, config.capacity)?;
    let stubs = pad_lists(&clusters, config.capacity)?;

    let offset = shape.residual_offset();
    let mut residuals = vec![Vec::new(); vectors.len()];
    for (i, cluster) in clusters.iter().enumerate() {
        for &t in cluster {
            residuals[t] = residual(&vectors[t], &centroids[i], offset);
        }
    }
    let codebooks = train_pq(&residuals, config.sub_quantizers, config.codebook_size, seed.wrapping_add(1))?;
    let lists = stubs
        .iter()
        .map(|list| {
            list.iter()
                .map(|slot| match *slot {
                    Some(t) => SlotRecord { valid: true, item: items[t], code: encode_pq(&residuals[t], &codebooks) },
                    None => SlotRecord::padding(config.sub_quantizers),
                })
                .collect()
        })
        .collect();
    let snapshot = Snapshot { config, field, scale, centroids, lists, codebooks };
    debug_assert!(snapshot.validate().is_ok());
    Ok((snapshot, report))
}

fn check_inputs(
    vectors: &[FxVector],
    items: &[u64],
    config: &IvfPqConfig,
    field: &FieldSpec,
    coord_max: u64,
) -> Result<()> {
    if vectors.len() != config.n0 || items.len() != config.n0 {
        return Err(Error::InvalidConfig(format!(
            "configured for {} vectors, got {} vectors and {} items",
            config.n0,
            vectors.len(),
            items.len()
        )));
    }
    let mut seen = HashSet::new();
    for (v, &item) in vectors.iter().zip(items) {
        if v.dim() != config.dim {
            return Err(Error::DimensionMismatch { expected: config.dim, got: v.dim() });
        }
        if v.max_coord() > coord_max {
            return Err(Error::malformed("vector", "coordinate exceeds the scale"));
        }
        if item >= field.cmp_bound() {
            return Err(Error::ItemOutOfRange { item, bits: field.t_cmp() - 1 });
        }
        if !seen.insert(item) {
            return Err(Error::DuplicateItem(item));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fx(c: &[u64]) -> FxVector {
        FxVector::from_coords(c.to_vec())
    }

    #[test]
    fn square_splits_along_an_edge() {
        let pts = vec![fx(&[0, 0]), fx(&[0, 2]), fx(&[2, 0]), fx(&[2, 2])];
        let mut cs = train_centroids(&pts, 2, 3).unwrap();
        cs.sort();
        let mids = [vec![fx(&[0, 1]), fx(&[2, 1])], vec![fx(&[1, 0]), fx(&[1, 2])]];
        assert!(mids.contains(&cs), "{cs:?}");
    }

    #[test]
    fn assignment_rules() {
        let cs = vec![fx(&[0]), fx(&[10]), fx(&[20]), fx(&[10])];
        let vs = vec![fx(&[5]), fx(&[15]), fx(&[1]), fx(&[19])];
        assert_eq!(assign(&vs, &cs).unwrap(), vec![vec![0, 2], vec![1], vec![3], vec![]]);
        assert_eq!(assign(&vs, &cs[..1]).unwrap(), vec![vec![0, 1, 2, 3]]);
        assert!(assign(&[fx(&[1, 2])], &cs).is_err());
    }

    #[test]
    fn padding_layout() {
        let stubs = pad_lists(&[vec![7, 2, 5], vec![], vec![1, 0, 3, 4]], 4).unwrap();
        assert_eq!(stubs[0], vec![Some(2), Some(5), Some(7), None]);
        assert_eq!(stubs[1], vec![None; 4]);
        assert_eq!(stubs[2], vec![Some(0), Some(1), Some(3), Some(4)]);
        assert!(pad_lists(&[vec![0, 1, 2]], 2).is_err());
    }

    #[test]
    fn pq_training_and_encoding() {
        let r = vec![vec![0u64], vec![0], vec![10], vec![10]];
        let mut words = train_pq(&r, 1, 2, 5).unwrap().flat().to_vec();
        words.sort();
        assert_eq!(words, vec![0, 10]);
        let zeros = vec![vec![0u64; 4]; 5];
        assert!(train_pq(&zeros, 2, 2, 0).unwrap().flat().iter().all(|&w| w == 0));

        let cb = Codebooks::new(1, 4, 2, vec![0, 0, 4, 4, 8, 8, 2, 2]).unwrap();
        assert_eq!(encode_pq(&[2, 2], &cb), vec![3]);
        // Equidistant to words 0 and 1.
        let cb = Codebooks::new(1, 2, 1, vec![0, 4]).unwrap();
        assert_eq!(encode_pq(&[2], &cb), vec![0]);
    }

    fn synthetic(n0: usize) -> (Vec<FxVector>, Vec<u64>) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(n0 as u64);
        let vs = (0..n0).map(|_| FxVector::from_coords((0..4).map(|_| rng.gen_range(0..=255)).collect())).collect();
        (vs, (0..n0 as u64).map(|i| 100 + i).collect())
    }

    fn cfg(n0: usize) -> IvfPqConfig {
        IvfPqConfig { n0, dim: 4, n_list: 4, n_probe: 2, capacity: 4, sub_quantizers: 2, codebook_size: 2, top_k: 2 }
    }

    #[test]
    fn build_conserves_flags_and_is_deterministic() {
        let scale = FxScale::new(8, 1.0, false).unwrap();
        let (vs, items) = synthetic(8);
        let (s, _) = build_snapshot(&vs, &items, cfg(8), FieldSpec::goldilocks(), scale, 9).unwrap();
        s.validate().unwrap();
        assert_eq!(s.valid_count(), 8);
        let (again, _) = build_snapshot(&vs, &items, cfg(8), FieldSpec::goldilocks(), scale, 9).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn full_capacity_has_no_padding() {
        let scale = FxScale::new(8, 1.0, false).unwrap();
        let (vs, items) = synthetic(16);
        let (s, report) = build_snapshot(&vs, &items, cfg(16), FieldSpec::goldilocks(), scale, 1).unwrap();
        assert!(s.lists.iter().flatten().all(|r| r.valid));
        assert!(report.moved_count <= 16);
    }

    #[test]
    fn build_rejects_bad_items() {
        let scale = FxScale::new(8, 1.0, false).unwrap();
        let (vs, mut items) = synthetic(8);
        items[3] = items[2];
        assert!(matches!(
            build_snapshot(&vs, &items, cfg(8), FieldSpec::goldilocks(), scale, 0),
            Err(Error::DuplicateItem(_))
        ));
        items[3] = 1 << 60;
        assert!(matches!(
            build_snapshot(&vs, &items, cfg(8), FieldSpec::goldilocks(), scale, 0),
            Err(Error::ItemOutOfRange { .. })
        ));
    }
}
