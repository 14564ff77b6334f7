//! Reference executor of the five-step fixed-shape IVF-PQ query.
//!
//! 1. distances from the query to every centroid;
//! 2. a stable sort of `(list, distance)` pairs selects the `n_probe` nearest lists;
//! 3. ADC tables of block distances between the residual query and every codeword;
//! 4. a masked ADC distance for every slot of every probed list, `d_max` for padding;
//! 5. a stable sort of `(item, distance)` pairs returns the first `k` items.
//!
//! Ties are broken by list index in step 2 and by item in step 5, so every query
//! has exactly one reference answer.

use crate::commitment::{commit_snapshot, Commitment};
use crate::config::CircuitShape;
use crate::error::{Error, Result};
use crate::fixedpoint::{sq_dist, FxVector};
use crate::shaping::{Codebooks, Snapshot};

/// Probed lists and the full sorted `(list, distance)` sequence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProbeSet {
    pub indices: Vec<usize>,
    pub sorted_pairs: Vec<(usize, u64)>,
}

/// ADC lookup tables for every probed list, indexed by probe position, sub-quantizer and codeword.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdcTables {
    sub_quantizers: usize,
    codebook_size: usize,
    values: Vec<u64>,
}

impl AdcTables {
    pub fn get(&self, probe: usize, m: usize, k: usize) -> u64 {
        self.values[(probe * self.sub_quantizers + m) * self.codebook_size + k]
    }

    /// Table of probe `p`, sub-quantizer `m`.
    pub fn table(&self, probe: usize, m: usize) -> &[u64] {
        let start = (probe * self.sub_quantizers + m) * self.codebook_size;
        &self.values[start..start + self.codebook_size]
    }

    pub fn values(&self) -> &[u64] {
        &self.values
    }
}

/// One scored slot of a probed list.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Candidate {
    pub item: u64,
    pub distance: u64,
    /// Probe position `p`; the slot lives in list `indices[p]`.
    pub probe: usize,
    pub slot: usize,
}

/// All `n_probe * n` scored slots in probe-major order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CandidateList {
    pub entries: Vec<Candidate>,
}

/// Intermediate values of one query execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryTrace {
    pub centroid_distances: Vec<u64>,
    pub probes: ProbeSet,
    pub tables: AdcTables,
    pub candidates: CandidateList,
    /// Candidates sorted by `(distance, item)`.
    pub sorted: Vec<Candidate>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QueryResult {
    pub items: Vec<u64>,
    pub distances: Vec<u64>,
    pub trace: QueryTrace,
}

fn check_query(q: &FxVector, shape: &CircuitShape) -> Result<()> {
    if q.dim() != shape.config.dim {
        return Err(Error::DimensionMismatch { expected: shape.config.dim, got: q.dim() });
    }
    if let Some(&value) = q.coords().iter().find(|&&c| c > shape.coord_max) {
        return Err(Error::ResidualOutOfRange { value, max: shape.coord_max });
    }
    Ok(())
}

pub fn step1_centroid_distances(q: &FxVector, s: &Snapshot) -> Result<Vec<u64>> {
    let shape = s.shape()?;
    check_query(q, &shape)?;
    s.centroids
        .iter()
        .map(|mu| {
            if mu.dim() != q.dim() {
                return Err(Error::DimensionMismatch { expected: q.dim(), got: mu.dim() });
            }
            Ok(sq_dist(q.coords(), mu.coords()))
        })
        .collect()
}

pub fn step2_probe_select(distances: &[u64], n_probe: usize) -> ProbeSet {
    let mut sorted_pairs: Vec<(usize, u64)> = distances.iter().copied().enumerate().collect();
    sorted_pairs.sort_by_key(|&(i, d)| (d, i));
    let indices = sorted_pairs.iter().take(n_probe).map(|&(i, _)| i).collect();
    ProbeSet { indices, sorted_pairs }
}

pub fn step3_adc_tables(q: &FxVector, s: &Snapshot, probes: &ProbeSet) -> Result<AdcTables> {
    let shape = s.shape()?;
    check_query(q, &shape)?;
    let mut values = Vec::with_capacity(probes.indices.len() * s.config.sub_quantizers * s.config.codebook_size);
    for &i in &probes.indices {
        let mu = &s.centroids[i];
        if let Some(&value) = mu.coords().iter().find(|&&c| c > shape.coord_max) {
            return Err(Error::ResidualOutOfRange { value, max: shape.coord_max });
        }
        values.extend(adc_table(q.coords(), mu.coords(), &s.codebooks, shape.residual_offset()));
    }
    Ok(AdcTables { sub_quantizers: s.config.sub_quantizers, codebook_size: s.config.codebook_size, values })
}

/// Block distances from the shifted residual `q - mu + offset` to every codeword, by `m`, then `k`.
pub fn adc_table(q: &[u64], mu: &[u64], codebooks: &Codebooks, offset: u64) -> Vec<u64> {
    let d = codebooks.sub_dim();
    let r: Vec<u64> = q.iter().zip(mu).map(|(&x, &m)| x + offset - m).collect();
    let mut out = Vec::with_capacity(codebooks.sub_quantizers() * codebooks.codebook_size());
    for m in 0..codebooks.sub_quantizers() {
        for k in 0..codebooks.codebook_size() {
            out.push(sq_dist(codebooks.word(m, k), &r[m * d..(m + 1) * d]));
        }
    }
    out
}

pub fn step4_candidate_distances(s: &Snapshot, probes: &ProbeSet, tables: &AdcTables) -> Result<CandidateList> {
    // CircuitShape validation enforces d_max > D * (2R)^2.
    s.shape()?;
    let d_max = s.field.d_max();
    let mut entries = Vec::with_capacity(probes.indices.len() * s.config.capacity);
    for (p, &i) in probes.indices.iter().enumerate() {
        for (j, rec) in s.lists[i].iter().enumerate() {
            let adc: u64 = rec.code.iter().enumerate().map(|(m, &v)| tables.get(p, m, v as usize)).sum();
            let distance = if rec.valid { adc } else { d_max };
            entries.push(Candidate { item: rec.item, distance, probe: p, slot: j });
        }
    }
    Ok(CandidateList { entries })
}

/// Stable sort by `(distance, item)`; returns the first `k` items, their distances and the full order.
pub fn step5_topk(candidates: &CandidateList, k: usize) -> (Vec<u64>, Vec<u64>, Vec<Candidate>) {
    let mut sorted = candidates.entries.clone();
    sorted.sort_by_key(|c| (c.distance, c.item));
    let items = sorted.iter().take(k).map(|c| c.item).collect();
    let distances = sorted.iter().take(k).map(|c| c.distance).collect();
    (items, distances, sorted)
}

pub fn run_query(q: &FxVector, s: &Snapshot) -> Result<QueryResult> {
    let centroid_distances = step1_centroid_distances(q, s)?;
    let probes = step2_probe_select(&centroid_distances, s.config.n_probe);
    let tables = step3_adc_tables(q, s, &probes)?;
    let candidates = step4_candidate_distances(s, &probes, &tables)?;
    let (items, distances, sorted) = step5_topk(&candidates, s.config.top_k);
    Ok(QueryResult { items, distances, trace: QueryTrace { centroid_distances, probes, tables, candidates, sorted } })
}

/// Runs the query after checking that `s` is the snapshot committed to by `com`.
pub fn run_query_against(q: &FxVector, s: &Snapshot, com: &Commitment) -> Result<QueryResult> {
    if commit_snapshot(s)? != *com {
        return Err(Error::WitnessInconsistent("snapshot does not match the commitment".into()));
    }
    run_query(q, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::IvfPqConfig;
    use crate::fixedpoint::{FieldSpec, FxScale};
    use crate::fixtures::{random_query, random_snapshot};
    use crate::shaping::{Codebooks, SlotRecord};
    use rand::SeedableRng;

    fn fx(c: &[u64]) -> FxVector {
        FxVector::from_coords(c.to_vec())
    }

    /// Two lists of two slots, D = M = 2, K = 2, 8-bit unsigned scale (R = 255).
    fn hand_snapshot() -> Snapshot {
        let config = IvfPqConfig {
            n0: 3,
            dim: 2,
            n_list: 2,
            n_probe: 1,
            capacity: 2,
            sub_quantizers: 2,
            codebook_size: 2,
            top_k: 2,
        };
        let rec = |item, code: [u32; 2]| SlotRecord { valid: true, item, code: code.to_vec() };
        Snapshot {
            config,
            field: FieldSpec::goldilocks(),
            scale: FxScale::new(8, 1.0, false).unwrap(),
            centroids: vec![fx(&[10, 10]), fx(&[100, 100])],
            lists: vec![vec![rec(7, [0, 1]), rec(8, [1, 1])], vec![rec(9, [0, 0]), SlotRecord::padding(2)]],
            codebooks: Codebooks::new(2, 2, 1, vec![255, 257, 253, 260]).unwrap(),
        }
    }

    #[test]
    fn step1_examples() {
        let s = hand_snapshot();
        assert_eq!(step1_centroid_distances(&fx(&[10, 10]), &s).unwrap(), vec![0, 16200]);
        assert_eq!(step1_centroid_distances(&fx(&[13, 14]), &s).unwrap(), vec![25, 87 * 87 + 86 * 86]);
        assert!(matches!(step1_centroid_distances(&fx(&[1]), &s), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn step2_examples() {
        let p = step2_probe_select(&[5, 2, 9, 2], 2);
        assert_eq!(p.indices, vec![1, 3]);
        assert_eq!(p.sorted_pairs, vec![(1, 2), (3, 2), (0, 5), (2, 9)]);
        assert_eq!(step2_probe_select(&[5, 2, 9, 2], 4).indices, vec![1, 3, 0, 2]);
        assert_eq!(step2_probe_select(&[4, 1, 1], 1).indices, vec![1]);
    }

    #[test]
    fn step3_and_step4_by_hand() {
        let s = hand_snapshot();
        let q = fx(&[12, 9]);
        let probes = step2_probe_select(&step1_centroid_distances(&q, &s).unwrap(), 1);
        assert_eq!(probes.indices, vec![0]);
        // Residual (12 - 10 + 255, 9 - 10 + 255) = (257, 254).
        let t = step3_adc_tables(&q, &s, &probes).unwrap();
        assert_eq!(t.table(0, 0), &[4, 0]);
        assert_eq!(t.table(0, 1), &[1, 36]);
        let c = step4_candidate_distances(&s, &probes, &t).unwrap();
        assert_eq!(c.entries.iter().map(|e| e.distance).collect::<Vec<_>>(), vec![4 + 36, 36]);
        let (items, dists, _) = step5_topk(&c, 2);
        assert_eq!(items, vec![8, 7]);
        assert_eq!(dists, vec![36, 40]);
    }

    #[test]
    fn zero_residual_and_zero_codeword() {
        let mut s = hand_snapshot();
        s.codebooks = Codebooks::new(2, 2, 1, vec![255, 0, 255, 0]).unwrap();
        let q = fx(&[100, 100]);
        let probes = ProbeSet { indices: vec![1], sorted_pairs: vec![] };
        let t = step3_adc_tables(&q, &s, &probes).unwrap();
        assert_eq!(t.get(0, 0, 0), 0);
        assert_eq!(t.get(0, 1, 0), 0);
    }

    #[test]
    fn padding_gets_dmax() {
        let s = hand_snapshot();
        let q = fx(&[100, 100]);
        let r = run_query(&q, &s).unwrap();
        assert_eq!(r.trace.probes.indices, vec![1]);
        assert_eq!(r.items, vec![9, 0]);
        assert_eq!(r.distances[1], s.field.d_max());
    }

    #[test]
    fn step5_examples() {
        let c = |item, distance| Candidate { item, distance, probe: 0, slot: 0 };
        let list = CandidateList { entries: vec![c(10, 9), c(11, 2), c(12, 5)] };
        assert_eq!(step5_topk(&list, 2).0, vec![11, 12]);
        assert_eq!(step5_topk(&list, 3).0, vec![11, 12, 10]);
        let ties = CandidateList { entries: vec![c(5, 3), c(4, 3), c(6, 1)] };
        assert_eq!(step5_topk(&ties, 2).0, vec![6, 4]);
    }

    #[test]
    fn single_valid_vector() {
        let mut s = hand_snapshot();
        s.config.n0 = 1;
        s.lists[0] = vec![SlotRecord::padding(2); 2];
        s.lists[1][0].item = 42;
        s.config.top_k = 1;
        s.config.n_probe = 2;
        let r = run_query(&fx(&[0, 0]), &s).unwrap();
        assert_eq!(r.items, vec![42]);
    }

    #[test]
    fn out_of_range_query() {
        let s = hand_snapshot();
        assert!(matches!(run_query(&fx(&[256, 0]), &s), Err(Error::ResidualOutOfRange { .. })));
    }

    #[test]
    fn invariants_on_random_instances() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for seed in 0..200 {
            let mut config = crate::fixtures::small_config(8, 4, 4, 2, 4);
            config.n_probe = 1 + seed as usize % 8;
            config.top_k = 1 + seed as usize % (config.n_sel());
            let s = random_snapshot(seed, config);
            let q = random_query(&mut rng, &s);
            let r = run_query(&q, &s).unwrap();
            let t = &r.trace;
            assert_eq!(t.candidates.entries.len(), config.n_sel());
            assert!(r.distances.windows(2).all(|w| w[0] <= w[1]));
            let cut = t.probes.sorted_pairs[config.n_probe - 1].1;
            assert!(t.probes.sorted_pairs[config.n_probe..].iter().all(|&(_, d)| d >= cut));
            let mut a = t.probes.sorted_pairs.clone();
            a.sort();
            assert_eq!(a, t.centroid_distances.iter().copied().enumerate().collect::<Vec<_>>());
            let valid = t.candidates.entries.iter().filter(|c| c.distance < s.field.d_max()).count();
            if valid >= config.top_k {
                assert!(r.distances.iter().all(|&d| d < s.field.d_max()));
            }
            assert_eq!(r, run_query(&q, &s).unwrap());
        }
    }

    #[test]
    fn commitment_check() {
        let s = random_snapshot(1, crate::fixtures::small_config(4, 2, 2, 1, 2));
        let com = commit_snapshot(&s).unwrap();
        let q = fx(&[1, 2]);
        run_query_against(&q, &s, &com).unwrap();
        let other = commit_snapshot(&random_snapshot(2, s.config)).unwrap();
        assert!(matches!(run_query_against(&q, &s, &other), Err(Error::WitnessInconsistent(_))));
    }
}
