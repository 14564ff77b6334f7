//! Integer Lloyd's k-means with k-means++ seeding.
//!
//! Points and centroids are encoded coordinates; each update rounds the cluster
//! mean back to the integer grid, so centroids are always valid encodings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::fixedpoint::sq_dist;

pub const DEFAULT_ITERATIONS: usize = 25;

/// Index of the nearest centroid, ties to the smallest index.
pub fn nearest<C: AsRef<[u64]>>(point: &[u64], centroids: &[C]) -> usize {
    let mut best = (u64::MAX, 0);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c.as_ref());
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Runs k-means on `points` and returns `k` integer centroids.
pub fn lloyd<P: AsRef<[u64]>>(points: &[P], k: usize, seed: u64, iterations: usize) -> Result<Vec<Vec<u64>>> {
    if k == 0 || points.len() < k {
        return Err(Error::TooFewVectors { needed: k.max(1), got: points.len() });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = plus_plus(points, k, &mut rng);
    let mut labels = vec![usize::MAX; points.len()];
    for _ in 0..iterations {
        let mut changed = false;
        for (label, p) in labels.iter_mut().zip(points) {
            let best = nearest(p.as_ref(), &centroids);
            changed |= *label != best;
            *label = best;
        }
        if !changed {
            break;
        }
        centroids = update(points, &labels, &centroids);
    }
    Ok(centroids)
}

fn plus_plus<P: AsRef<[u64]>>(points: &[P], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<u64>> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())].as_ref().to_vec()];
    let mut weights: Vec<f64> = points.iter().map(|p| sq_dist(p.as_ref(), &centroids[0]) as f64).collect();
    while centroids.len() < k {
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.gen::<f64>() * total;
            let mut pick = weights.iter().rposition(|&w| w > 0.0).unwrap_or(0);
            for (i, &w) in weights.iter().enumerate() {
                if target < w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[pick].as_ref().to_vec();
        for (w, p) in weights.iter_mut().zip(points) {
            *w = w.min(sq_dist(p.as_ref(), &c) as f64);
        }
        centroids.push(c);
    }
    centroids
}

fn update<P: AsRef<[u64]>>(points: &[P], labels: &[usize], old: &[Vec<u64>]) -> Vec<Vec<u64>> {
    let dim = old[0].len();
    let mut sums = vec![vec![0u128; dim]; old.len()];
    let mut counts = vec![0usize; old.len()];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, &x) in sums[l].iter_mut().zip(p.as_ref()) {
            *s += x as u128;
        }
    }
    let mut centroids: Vec<Vec<u64>> = sums
        .iter()
        .zip(&counts)
        .zip(old)
        .map(|((s, &n), prev)| {
            if n == 0 {
                prev.clone()
            } else {
                // Round half up; all quantities are nonnegative.
                s.iter().map(|&x| ((2 * x + n as u128) / (2 * n as u128)) as u64).collect()
            }
        })
        .collect();
    // Empty clusters take over the point farthest from the centroid of the largest cluster.
    let empties: Vec<usize> = (0..old.len()).filter(|&i| counts[i] == 0).collect();
    for empty in empties {
        let largest = (0..old.len()).max_by_key(|&i| (counts[i], std::cmp::Reverse(i))).unwrap_or(0);
        let far = points
            .iter()
            .zip(labels)
            .enumerate()
            .filter(|(_, (_, &l))| l == largest)
            .max_by_key(|(i, (p, _))| (sq_dist(p.as_ref(), &centroids[largest]), std::cmp::Reverse(*i)));
        if let Some((_, (p, _))) = far {
            if sq_dist(p.as_ref(), &centroids[largest]) > 0 {
                centroids[empty] = p.as_ref().to_vec();
                counts[largest] -= 1;
                counts[empty] = 1;
            }
        }
    }
    centroids
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_breaks_ties_low() {
        let cs = vec![vec![0u64], vec![2], vec![4], vec![2]];
        assert_eq!(nearest(&[3], &cs), 1);
        assert_eq!(nearest(&[2], &cs), 1);
    }

    #[test]
    fn distinct_points_become_centroids() {
        let pts = vec![vec![0u64, 0], vec![9, 1], vec![4, 7], vec![1, 8]];
        for seed in 0..10 {
            let mut cs = lloyd(&pts, 4, seed, DEFAULT_ITERATIONS).unwrap();
            cs.sort();
            let mut want = pts.clone();
            want.sort();
            assert_eq!(cs, want);
        }
    }

    #[test]
    fn one_dimensional_two_means() {
        let pts = vec![vec![0u64], vec![0], vec![10], vec![10]];
        let mut cs = lloyd(&pts, 2, 7, DEFAULT_ITERATIONS).unwrap();
        cs.sort();
        assert_eq!(cs, vec![vec![0], vec![10]]);
    }

    #[test]
    fn identical_points() {
        let pts = vec![vec![5u64, 5]; 6];
        assert_eq!(lloyd(&pts, 1, 1, DEFAULT_ITERATIONS).unwrap(), vec![vec![5, 5]]);
        assert!(lloyd(&pts, 3, 1, DEFAULT_ITERATIONS).unwrap().iter().all(|c| c == &[5, 5]));
    }

    #[test]
    fn too_few_points() {
        let pts = vec![vec![1u64]];
        assert!(matches!(lloyd(&pts, 2, 0, 5), Err(Error::TooFewVectors { .. })));
    }
}
