//! Timing and utility reports.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};
use v3db::dataset::{exact_knn, MixtureSpec};
use v3db::fixtures::{random_query, random_snapshot};
use v3db::format::encode_proof;
use v3db::utility::{hit_at, mrr_at, ndcg_at, recall_at, FixedPointIvfPq, FloatIvfPq};
use v3db::{IvfPqConfig, QueryCircuit};

use crate::config::RunConfig;
use crate::error::Failure;

/// Mean and half-width of the two-sided 95% Student t interval.
pub fn mean_ci(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0).expect("positive degrees of freedom").inverse_cdf(0.975);
    (mean, t * (var / n).sqrt())
}

/// Peak resident set size in MiB, where the platform reports it.
fn peak_memory_mib() -> f64 {
    std::fs::read_to_string("/proc/self/status")
        .ok()
        .and_then(|s| {
            let line = s.lines().find(|l| l.starts_with("VmHWM:"))?;
            line.split_whitespace().nth(1)?.parse::<f64>().ok()
        })
        .map_or(f64::NAN, |kib| kib / 1024.0)
}

fn cell(xs: &[f64], digits: usize) -> String {
    let (mean, ci) = mean_ci(xs);
    format!("{mean:.digits$} ± {ci:.digits$}")
}

/// Proves and verifies `reps` random instances of the configured shape.
pub fn proving(cfg: &RunConfig, reps: usize) -> Result<(), Failure> {
    if reps == 0 {
        return Err(Failure::usage("--reps must be positive"));
    }
    let ivf = IvfPqConfig { n0: if cfg.ivf.n0 == 0 { cfg.ivf.total_slots() / 2 } else { cfg.ivf.n0 }, ..cfg.ivf };
    ivf.validate()?;
    let shape = random_snapshot(cfg.seed, ivf).shape()?;
    let qc = QueryCircuit::build(&shape, cfg.variant)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let (mut prove_s, mut verify_ms, mut size_kib, mut memory) = (vec![], vec![], vec![], vec![]);
    for r in 0..reps {
        let s = random_snapshot(cfg.seed.wrapping_add(r as u64 + 1), ivf);
        let q = random_query(&mut rng, &s);
        let t = Instant::now();
        let bundle = qc.prove(&s, &q)?;
        prove_s.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        qc.verify(&bundle)?;
        verify_ms.push(t.elapsed().as_secs_f64() * 1e3);
        size_kib.push(encode_proof(&bundle).len() as f64 / 1024.0);
        memory.push(peak_memory_mib());
    }
    let stats = qc.stats();
    println!("variant={} reps={reps} padded_rows={}", cfg.variant, stats.padded_rows.unwrap_or(stats.bin));
    println!("prove [s] | verify [ms] | proof [KiB] | memory [MiB] | G | G_B");
    println!(
        "{} | {} | {} | {} | {} | {}",
        cell(&prove_s, 3),
        cell(&verify_ms, 2),
        cell(&size_kib, 1),
        cell(&memory, 1),
        cell(&vec![stats.gates as f64; reps], 0),
        cell(&vec![stats.bin as f64; reps], 0)
    );
    Ok(())
}

/// Float IVF-PQ against the fixed-point, rebalanced pipeline on a synthetic mixture.
pub fn utility(cfg: &RunConfig, count: usize) -> Result<(), Failure> {
    let held_out = 200;
    let components = if cfg.components == 0 { cfg.ivf.n_list } else { cfg.components };
    let data = MixtureSpec::new(count + held_out, cfg.ivf.dim, components, cfg.seed).sample()?;
    let (base, queries) = data.split_at(count);
    let ivf = cfg.ivf_for(count)?;
    let k = ivf.top_k;
    let float = FloatIvfPq::train(base, ivf.n_list, ivf.sub_quantizers, ivf.codebook_size, cfg.seed)?;
    let fixed = FixedPointIvfPq::build(base, ivf, cfg.scale_bits, cfg.seed)?;
    let truth: Vec<usize> = queries.iter().map(|q| exact_knn(base, q, 1)[0]).collect();
    let std: Vec<Vec<usize>> = queries.iter().map(|q| float.search(q, ivf.n_probe, k)).collect();
    let zk = queries.iter().map(|q| fixed.search(q)).collect::<v3db::Result<Vec<_>>>()?;
    println!("vectors={count} queries={held_out} k={k} moved={}", fixed.report.moved_count);
    println!("{:<8} {:>9} {:>9} {:>9} {:>9}", "pipeline", "recall", "hit", "mrr", "ndcg");
    for (name, r) in [("float", &std), ("zk", &zk)] {
        println!(
            "{name:<8} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            recall_at(r, &truth, k),
            hit_at(r, &truth, k),
            mrr_at(r, &truth, k),
            ndcg_at(r, &truth, k)
        );
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ci_matches_a_hand_computed_t_interval() {
        // mean 2, sample sd 1, t(0.975, 2) = 4.3027.
        let (mean, ci) = mean_ci(&[1.0, 2.0, 3.0]);
        assert_eq!(mean, 2.0);
        assert!((ci - 4.302_653 / 3f64.sqrt()).abs() < 1e-4);
        assert_eq!(mean_ci(&[5.0]), (5.0, 0.0));
    }
}
