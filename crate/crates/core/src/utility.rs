//! Retrieval utility: a floating-point IVF-PQ reference pipeline, the fixed-point
//! pipeline built on [`Snapshot`]s, and ranking metrics.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::IvfPqConfig;
use crate::error::{Error, Result};
use crate::fixedpoint::{encode_clamped, encode_f32, FieldSpec, FxScale, FxVector};
use crate::semantics::run_query;
use crate::shaping::{build_snapshot, RebalanceReport, Snapshot, DEFAULT_ITERATIONS};

fn l2(a: &[f32], b: &[f32]) -> f32 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(p: &[f32], centroids: &[Vec<f32>]) -> usize {
    let mut best = (f32::INFINITY, 0);
    for (i, c) in centroids.iter().enumerate() {
        let d = l2(p, c);
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Float Lloyd's k-means with k-means++ seeding; empty clusters keep their centroid.
pub fn kmeans(points: &[&[f32]], k: usize, seed: u64, iterations: usize) -> Result<Vec<Vec<f32>>> {
    if k == 0 || points.len() < k {
        return Err(Error::TooFewVectors { needed: k.max(1), got: points.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = vec![points[rng.gen_range(0..points.len())].to_vec()];
    let mut weights: Vec<f32> = points.iter().map(|p| l2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f32 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f32>() * total;
            weights
                .iter()
                .position(|&w| {
                    target -= w;
                    target < 0.0
                })
                .unwrap_or_else(|| weights.iter().rposition(|&w| w > 0.0).unwrap_or(0))
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[pick].to_vec();
        weights.iter_mut().zip(points).for_each(|(w, p)| *w = w.min(l2(p, &c)));
        centroids.push(c);
    }
    let dim = points[0].len();
    for _ in 0..iterations {
        let mut sums = vec![vec![0f64; dim]; k];
        let mut counts = vec![0usize; k];
        for p in points {
            let c = nearest(p, &centroids);
            counts[c] += 1;
            sums[c].iter_mut().zip(p.iter()).for_each(|(s, &x)| *s += x as f64);
        }
        let mut moved = false;
        for ((c, sum), &n) in centroids.iter_mut().zip(&sums).zip(&counts) {
            if n == 0 {
                continue;
            }
            let mean: Vec<f32> = sum.iter().map(|&s| (s / n as f64) as f32).collect();
            moved |= mean != *c;
            *c = mean;
        }
        if !moved {
            break;
        }
    }
    Ok(centroids)
}

/// Standard floating-point IVF-PQ without capacity limits.
#[derive(Clone, Debug)]
pub struct FloatIvfPq {
    centroids: Vec<Vec<f32>>,
    /// `(vector index, PQ code)` per list.
    lists: Vec<Vec<(usize, Vec<usize>)>>,
    /// `codebooks[m][k]` is a `d`-dimensional codeword.
    codebooks: Vec<Vec<Vec<f32>>>,
}

impl FloatIvfPq {
    pub fn train(
        vectors: &[Vec<f32>],
        n_list: usize,
        sub_quantizers: usize,
        codebook_size: usize,
        seed: u64,
    ) -> Result<Self> {
        let dim = vectors.first().map_or(0, Vec::len);
        if dim == 0 || sub_quantizers == 0 || !dim.is_multiple_of(sub_quantizers) {
            return Err(Error::InvalidConfig(format!("D = {dim} is not a positive multiple of M = {sub_quantizers}")));
        }
        let points: Vec<&[f32]> = vectors.iter().map(Vec::as_slice).collect();
        let centroids = kmeans(&points, n_list, seed, DEFAULT_ITERATIONS)?;
        let labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        let residuals: Vec<Vec<f32>> = points
            .iter()
            .zip(&labels)
            .map(|(p, &c)| p.iter().zip(&centroids[c]).map(|(x, m)| x - m).collect())
            .collect();
        let d = dim / sub_quantizers;
        let codebooks = (0..sub_quantizers)
            .map(|m| {
                let blocks: Vec<&[f32]> = residuals.iter().map(|r| &r[m * d..(m + 1) * d]).collect();
                kmeans(&blocks, codebook_size, seed.wrapping_add(1 + m as u64), DEFAULT_ITERATIONS)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut lists = vec![Vec::new(); n_list];
        for (t, (r, &c)) in residuals.iter().zip(&labels).enumerate() {
            let code = (0..sub_quantizers).map(|m| nearest(&r[m * d..(m + 1) * d], &codebooks[m])).collect();
            lists[c].push((t, code));
        }
        Ok(FloatIvfPq { centroids, lists, codebooks })
    }

    /// Vector indices of the `k` best ADC scores over the `n_probe` nearest lists.
    pub fn search(&self, q: &[f32], n_probe: usize, k: usize) -> Vec<usize> {
        let mut order: Vec<(f32, usize)> = self.centroids.iter().enumerate().map(|(i, c)| (l2(q, c), i)).collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let d = q.len() / self.codebooks.len();
        let mut scored = Vec::new();
        for &(_, i) in order.iter().take(n_probe) {
            let r: Vec<f32> = q.iter().zip(&self.centroids[i]).map(|(x, m)| x - m).collect();
            let table: Vec<Vec<f32>> = self
                .codebooks
                .iter()
                .enumerate()
                .map(|(m, words)| words.iter().map(|w| l2(&r[m * d..(m + 1) * d], w)).collect())
                .collect();
            for (t, code) in &self.lists[i] {
                let s: f32 = code.iter().enumerate().map(|(m, &v)| table[m][v]).sum();
                scored.push((s, *t));
            }
        }
        scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        scored.into_iter().take(k).map(|(_, t)| t).collect()
    }
}

/// The fixed-point pipeline: encoded vectors shaped into a committed-ready snapshot.
#[derive(Clone, Debug)]
pub struct FixedPointIvfPq {
    pub snapshot: Snapshot,
    pub report: RebalanceReport,
}

impl FixedPointIvfPq {
    /// Vector `t` carries item `t + 1`; item 0 is reserved for padding.
    pub fn build(vectors: &[Vec<f32>], config: IvfPqConfig, bits: u32, seed: u64) -> Result<Self> {
        let scale = FxScale::fit(vectors.iter().map(Vec::as_slice), bits)?;
        let encoded = vectors.iter().map(|v| encode_f32(v, &scale)).collect::<Result<Vec<_>>>()?;
        let items: Vec<u64> = (1..=vectors.len() as u64).collect();
        let (snapshot, report) = build_snapshot(&encoded, &items, config, FieldSpec::goldilocks(), scale, seed)?;
        Ok(FixedPointIvfPq { snapshot, report })
    }

    /// Encodes a query, clamping coordinates into the snapshot's scale.
    pub fn encode_query(&self, q: &[f32]) -> Result<FxVector> {
        encode_clamped(q, &self.snapshot.scale)
    }

    /// Vector indices of the reference top-k answer.
    pub fn search(&self, q: &[f32]) -> Result<Vec<usize>> {
        let result = run_query(&self.encode_query(q)?, &self.snapshot)?;
        Ok(result.items.iter().filter(|&&item| item > 0).map(|&item| item as usize - 1).collect())
    }
}

/// Rank of `target` in `ranking`, 1-based, within the first `k` entries.
fn rank_within(ranking: &[usize], target: usize, k: usize) -> Option<usize> {
    ranking.iter().take(k).position(|&x| x == target).map(|p| p + 1)
}

fn mean_over<F: Fn(&[usize], usize) -> f64>(rankings: &[Vec<usize>], targets: &[usize], f: F) -> f64 {
    if rankings.is_empty() {
        return 0.0;
    }
    rankings.iter().zip(targets).map(|(r, &t)| f(r, t)).sum::<f64>() / rankings.len() as f64
}

/// Fraction of queries whose exact nearest neighbour appears in the top `k`.
pub fn recall_at(rankings: &[Vec<usize>], nearest: &[usize], k: usize) -> f64 {
    hit_at(rankings, nearest, k)
}

/// Fraction of queries whose single relevant item appears in the top `k`.
pub fn hit_at(rankings: &[Vec<usize>], relevant: &[usize], k: usize) -> f64 {
    mean_over(rankings, relevant, |r, t| rank_within(r, t, k).map_or(0.0, |_| 1.0))
}

/// Mean reciprocal rank truncated at `k`.
pub fn mrr_at(rankings: &[Vec<usize>], relevant: &[usize], k: usize) -> f64 {
    mean_over(rankings, relevant, |r, t| rank_within(r, t, k).map_or(0.0, |p| 1.0 / p as f64))
}

/// NDCG at `k` with binary relevance and one relevant item, so the ideal DCG is 1.
pub fn ndcg_at(rankings: &[Vec<usize>], relevant: &[usize], k: usize) -> f64 {
    mean_over(rankings, relevant, |r, t| rank_within(r, t, k).map_or(0.0, |p| 1.0 / (p as f64 + 1.0).log2()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{exact_knn, MixtureSpec};

    #[test]
    fn metrics_by_hand() {
        let rankings = vec![vec![4, 7, 1], vec![2, 3, 9], vec![5, 6, 8]];
        let relevant = [4, 9, 0];
        assert_eq!(hit_at(&rankings, &relevant, 3), 2.0 / 3.0);
        assert_eq!(hit_at(&rankings, &relevant, 1), 1.0 / 3.0);
        assert!((mrr_at(&rankings, &relevant, 3) - (1.0 + 1.0 / 3.0) / 3.0).abs() < 1e-12);
        assert!((ndcg_at(&rankings, &relevant, 3) - (1.0 + 0.5) / 3.0).abs() < 1e-12);
        assert_eq!(recall_at(&[], &[], 10), 0.0);
    }

    #[test]
    fn kmeans_separates_far_clusters() {
        let pts: Vec<Vec<f32>> =
            (0..20).map(|i| vec![if i < 10 { 0.0 } else { 100.0 } + (i % 10) as f32 * 0.1]).collect();
        let refs: Vec<&[f32]> = pts.iter().map(Vec::as_slice).collect();
        let mut cs = kmeans(&refs, 2, 1, 25).unwrap();
        cs.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!((cs[0][0] - 0.45).abs() < 1e-4 && (cs[1][0] - 100.45).abs() < 1e-4);
        assert!(kmeans(&refs[..1], 2, 1, 25).is_err());
    }

    #[test]
    fn both_pipelines_find_most_true_neighbours() {
        let data = MixtureSpec::new(600, 8, 6, 11).sample().unwrap();
        let (base, queries) = data.split_at(560);
        let float = FloatIvfPq::train(base, 8, 4, 16, 1).unwrap();
        let config = IvfPqConfig {
            n0: base.len(),
            dim: 8,
            n_list: 8,
            n_probe: 4,
            capacity: 128,
            sub_quantizers: 4,
            codebook_size: 16,
            top_k: 10,
        };
        let fixed = FixedPointIvfPq::build(base, config, 12, 1).unwrap();
        let truth: Vec<usize> = queries.iter().map(|q| exact_knn(base, q, 1)[0]).collect();
        let std: Vec<Vec<usize>> = queries.iter().map(|q| float.search(q, 4, 10)).collect();
        let zk: Vec<Vec<usize>> = queries.iter().map(|q| fixed.search(q).unwrap()).collect();
        assert!(recall_at(&std, &truth, 10) >= 0.8);
        assert!(recall_at(&zk, &truth, 10) >= 0.8);
    }
}
