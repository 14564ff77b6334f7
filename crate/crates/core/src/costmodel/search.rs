//! Bin-pruned search for the configuration with the smallest padded bin.

use std::fmt::Write as _;

use super::{Budgets, GateEstimate, Term};
use crate::config::IvfPqConfig;
use crate::error::{Error, Result};
use crate::proving::bin;

/// One evaluated `(n_list, K)` point.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GridPoint {
    pub n_list: usize,
    pub codebook_size: usize,
    pub gates: usize,
    pub bin: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TuneResult {
    /// Smallest bin `G_B*`.
    pub bin_star: usize,
    pub n_list_star: usize,
    pub k_star: usize,
    /// Every point evaluated, in evaluation order.
    pub explored: Vec<GridPoint>,
}

/// `n_list` values from the minimum feasible layout, doubling up to `n_list_max`.
fn list_grid(budgets: &Budgets, n_list_max: usize) -> Result<Vec<usize>> {
    let start = budgets.min_lists();
    if start > n_list_max {
        return Err(Error::InfeasibleBudgets(format!("minimum layout n_list = {start} exceeds {n_list_max}")));
    }
    Ok(std::iter::successors(Some(start), |&n| Some(n * 2)).take_while(|&n| n <= n_list_max).collect())
}

fn check_candidates(budgets: &Budgets, candidates: &[usize]) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(Error::InfeasibleBudgets("no codebook sizes to search".into()));
    }
    for &k in candidates {
        budgets.sub_quantizers(k)?;
    }
    let mut ks = candidates.to_vec();
    ks.sort_unstable();
    ks.dedup();
    Ok(ks)
}

fn point<E>(estimator: &mut E, n_list: usize, k: usize) -> Result<GridPoint>
where
    E: FnMut(usize, usize) -> Result<usize>,
{
    let gates = estimator(n_list, k)?;
    Ok(GridPoint { n_list, codebook_size: k, gates, bin: bin(gates) })
}

/// Starts at the minimum layout, keeps the codebook sizes in the smallest bin and
/// doubles `n_list` while any of them stays there. Ties go to the largest `K`, and
/// to the largest `n_list` that still has a survivor.
///
/// Matches [`exhaustive_search`] whenever every bin is nondecreasing in `n_list`.
pub fn pruned_search<E>(
    budgets: &Budgets,
    n_list_max: usize,
    candidates: &[usize],
    mut estimator: E,
) -> Result<TuneResult>
where
    E: FnMut(usize, usize) -> Result<usize>,
{
    let ks = check_candidates(budgets, candidates)?;
    let lists = list_grid(budgets, n_list_max)?;
    let mut explored = Vec::new();
    let mut n_list = lists[0];
    for &k in &ks {
        explored.push(point(&mut estimator, n_list, k)?);
    }
    let bin_star = explored.iter().map(|p| p.bin).min().expect("nonempty candidates");
    let mut alive: Vec<usize> = explored.iter().filter(|p| p.bin == bin_star).map(|p| p.codebook_size).collect();
    let mut best = (n_list, *alive.last().expect("some candidate attains the minimum"));
    while !alive.is_empty() && n_list < n_list_max {
        n_list *= 2;
        let mut next = Vec::with_capacity(alive.len());
        for &k in &alive {
            let p = point(&mut estimator, n_list, k)?;
            explored.push(p);
            if p.bin <= bin_star {
                next.push(k);
            }
        }
        alive = next;
        if let Some(&k) = alive.last() {
            best = (n_list, k);
        }
    }
    Ok(TuneResult { bin_star, n_list_star: best.0, k_star: best.1, explored })
}

/// Evaluates the full grid and returns the smallest bin and its largest `(n_list, K)`.
pub fn exhaustive_search<E>(
    budgets: &Budgets,
    n_list_max: usize,
    candidates: &[usize],
    mut estimator: E,
) -> Result<TuneResult>
where
    E: FnMut(usize, usize) -> Result<usize>,
{
    let ks = check_candidates(budgets, candidates)?;
    let mut explored = Vec::new();
    for n_list in list_grid(budgets, n_list_max)? {
        for &k in &ks {
            explored.push(point(&mut estimator, n_list, k)?);
        }
    }
    let bin_star = explored.iter().map(|p| p.bin).min().expect("nonempty grid");
    let best = explored
        .iter()
        .filter(|p| p.bin == bin_star)
        .map(|p| (p.n_list, p.codebook_size))
        .max()
        .expect("some point attains the minimum");
    Ok(TuneResult { bin_star, n_list_star: best.0, k_star: best.1, explored })
}

/// Number of local minima of a sequence, counting a flat run as one point.
pub fn local_minima(values: &[usize]) -> usize {
    let mut runs: Vec<usize> = values.to_vec();
    runs.dedup();
    (0..runs.len())
        .filter(|&i| (i == 0 || runs[i - 1] > runs[i]) && (i + 1 == runs.len() || runs[i + 1] > runs[i]))
        .count()
}

/// CSV with one row per configuration and one column per term.
pub fn grid_csv(rows: &[(IvfPqConfig, GateEstimate)]) -> String {
    let mut out = String::from("n_list,K,n_probe,n,M,G,G_B");
    for term in Term::ALL {
        out.push(',');
        out.push_str(term.name());
    }
    out.push('\n');
    for (c, e) in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{},{}",
            c.n_list, c.codebook_size, c.n_probe, c.capacity, c.sub_quantizers, e.gates, e.bin
        );
        for (_, v) in &e.terms {
            let _ = write!(out, ",{v:.3}");
        }
        out.push('\n');
    }
    out
}
