//! Capacity-constrained cluster rebalancing.

use crate::error::{Error, Result};
use crate::fixedpoint::sq_dist;

/// Outcome of a rebalancing run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RebalanceReport {
    /// Vectors moved out of their nearest cluster.
    pub moved_count: usize,
    /// Outer rounds executed.
    pub rounds: usize,
}

#[derive(Clone, Copy, Debug)]
struct Move {
    vector: usize,
    from: usize,
    to: usize,
    delta: i128,
}

/// Moves vectors out of overfull clusters until every cluster holds at most `capacity`.
///
/// Each round scores every vector of every overfull cluster once against its
/// nearest cluster with free space, then applies moves in ascending score order
/// while the source is still overfull and the target still has room. Every round
/// applies at least one move and no move creates overflow, so the loop ends after
/// at most `sum(max(0, |X_i| - capacity))` rounds.
///
/// Clusters hold vector indices into `vectors`; the result lists each cluster in
/// ascending index order.
pub fn rebalance<V: AsRef<[u64]>, C: AsRef<[u64]>>(
    clusters: &[Vec<usize>],
    vectors: &[V],
    centroids: &[C],
    capacity: usize,
) -> Result<(Vec<Vec<usize>>, RebalanceReport)> {
    let n_list = clusters.len();
    let n0: usize = clusters.iter().map(Vec::len).sum();
    if n0 > n_list * capacity {
        return Err(Error::InfeasibleCapacity { n0, n_list, capacity });
    }
    if centroids.len() != n_list {
        return Err(Error::LengthMismatch { left: centroids.len(), right: n_list });
    }
    let mut clusters = clusters.to_vec();
    let mut owner = vec![usize::MAX; vectors.len()];
    for (i, c) in clusters.iter().enumerate() {
        for &v in c {
            owner[v] = i;
        }
    }
    let dist = |v: usize, c: usize| sq_dist(vectors[v].as_ref(), centroids[c].as_ref()) as i128;
    let mut report = RebalanceReport::default();

    while clusters.iter().any(|c| c.len() > capacity) {
        report.rounds += 1;
        let free: Vec<usize> = (0..n_list).filter(|&t| clusters[t].len() < capacity).collect();
        let mut moves = Vec::new();
        for (i, cluster) in clusters.iter().enumerate().filter(|(_, c)| c.len() > capacity) {
            for &v in cluster {
                let to = free.iter().copied().min_by_key(|&t| (dist(v, t), t)).expect("free cluster exists");
                moves.push(Move { vector: v, from: i, to, delta: dist(v, to) - dist(v, i) });
            }
        }
        moves.sort_by_key(|m| m.delta);
        for m in moves {
            if clusters[m.from].len() > capacity && clusters[m.to].len() < capacity && owner[m.vector] == m.from {
                let pos = clusters[m.from].iter().position(|&v| v == m.vector).expect("owned vector is listed");
                clusters[m.from].remove(pos);
                clusters[m.to].push(m.vector);
                owner[m.vector] = m.to;
                report.moved_count += 1;
            }
        }
    }
    for c in &mut clusters {
        c.sort_unstable();
    }
    Ok((clusters, report))
}
