use std::fs;
use std::path::Path;
use std::time::Instant;

use v3db::costmodel::{gate_count, grid_csv, pruned_search, Budgets, Calibration, Workload};
use v3db::dataset::{load_fvecs, MixtureSpec};
use v3db::fixedpoint::{encode_clamped, encode_f32};
use v3db::format::{decode_proof, decode_snapshot, encode_proof, encode_snapshot};
use v3db::{build_snapshot, circuit_stats, run_query, CircuitShape, FxScale, QueryCircuit};

use crate::config::RunConfig;
use crate::error::Failure;
use crate::store::VersionStore;
use crate::Cli;

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

/// Vectors from an fvecs path or a `synthetic:COUNT` mixture.
pub fn load_vectors(cfg: &RunConfig, input: &str) -> Result<Vec<Vec<f32>>, Failure> {
    let vectors = match input.strip_prefix("synthetic:") {
        Some(count) => {
            let count = count.parse().map_err(|_| Failure::usage(format!("bad synthetic count {count:?}")))?;
            let components = if cfg.components == 0 { cfg.ivf.n_list } else { cfg.components };
            MixtureSpec::new(count, cfg.ivf.dim, components, cfg.seed).sample()?
        }
        None => load_fvecs(input)?,
    };
    if let Some(v) = vectors.iter().find(|v| v.len() != cfg.ivf.dim) {
        return Err(v3db::Error::DimensionMismatch { expected: cfg.ivf.dim, got: v.len() }.into());
    }
    Ok(vectors)
}

/// Scale covering `vectors` with the configured bits and signedness.
fn scale_for(cfg: &RunConfig, vectors: &[Vec<f32>]) -> Result<FxScale, Failure> {
    let fitted = FxScale::fit(vectors.iter().map(Vec::as_slice), cfg.scale_bits)?;
    if fitted.signed() && !cfg.signed {
        return Err(Failure::data("dataset has negative coordinates; set signed = true"));
    }
    Ok(FxScale::new(cfg.scale_bits, fitted.v_max(), cfg.signed)?)
}

pub fn shape(cfg: &RunConfig, input: &str, out: &Path) -> Result<(), Failure> {
    let vectors = load_vectors(cfg, input)?;
    let ivf = cfg.ivf_for(vectors.len())?;
    let scale = scale_for(cfg, &vectors)?;
    let encoded = vectors.iter().map(|v| encode_f32(v, &scale)).collect::<v3db::Result<Vec<_>>>()?;
    let items: Vec<u64> = (1..=vectors.len() as u64).collect();
    let (s, report) = build_snapshot(&encoded, &items, ivf, cfg.field, scale, cfg.seed)?;
    fs::write(out, encode_snapshot(&s))?;
    println!("rebalance moved={} rounds={}", report.moved_count, report.rounds);
    println!(
        "snapshot path={} valid={} n_list={} capacity={}",
        out.display(),
        s.valid_count(),
        ivf.n_list,
        ivf.capacity
    );
    Ok(())
}

pub fn commit(cli: &Cli, snapshot: &Path) -> Result<(), Failure> {
    let s = decode_snapshot(&fs::read(snapshot)?)?;
    let store = VersionStore::open(&cli.store)?;
    let (epoch, com) = store.append(&s, cli.epoch)?;
    println!("epoch={epoch} com={}", com.to_hex());
    Ok(())
}

pub fn query(cli: &Cli, queries: &Path) -> Result<(), Failure> {
    let store = VersionStore::open(&cli.store)?;
    let epoch = store.resolve(cli.epoch)?;
    let s = store.snapshot(epoch)?;
    for (i, q) in load_fvecs(queries)?.iter().enumerate() {
        let result = run_query(&encode_clamped(q, &s.scale)?, &s)?;
        if cli.debug {
            println!("query={i} items={} distances={}", join(&result.items), join(&result.distances));
        } else {
            println!("query={i} items={}", join(&result.items));
        }
    }
    Ok(())
}

pub fn prove(cli: &Cli, cfg: &RunConfig, queries: &Path, index: usize, out: &Path) -> Result<(), Failure> {
    let store = VersionStore::open(&cli.store)?;
    let epoch = store.resolve(cli.epoch)?;
    let s = store.snapshot(epoch)?;
    let queries = load_fvecs(queries)?;
    let q = queries.get(index).ok_or_else(|| Failure::usage(format!("no query at index {index}")))?;
    let start = Instant::now();
    let qc = QueryCircuit::build(&s.shape()?, cfg.variant)?;
    let bundle = qc.prove(&s, &encode_clamped(q, &s.scale)?)?;
    let bytes = encode_proof(&bundle);
    fs::write(out, &bytes)?;
    println!(
        "proof path={} epoch={epoch} variant={} items={} bytes={} seconds={:.3}",
        out.display(),
        cfg.variant,
        join(&bundle.public.items),
        bytes.len(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

/// Needs only the proof, the epoch's commitment and the public configuration.
pub fn verify(cli: &Cli, cfg: &RunConfig, proof: &Path) -> Result<(), Failure> {
    let bytes = fs::read(proof)?;
    let store = VersionStore::open(&cli.store)?;
    let epoch = store.resolve(cli.epoch)?;
    let com = store.commitment(epoch)?;
    let shape = CircuitShape::new(cfg.ivf, cfg.field, cfg.coord_max()?)?;
    let bundle = decode_proof(&bytes).map_err(|e| Failure::rejected(e.to_string()))?;
    if bundle.public.com != com {
        return Err(Failure::rejected(format!("proof is not about epoch {epoch}")));
    }
    let qc = QueryCircuit::build(&shape, cfg.variant)?;
    qc.verify(&bundle).map_err(|e| Failure::rejected(e.to_string()))?;
    println!("accept epoch={epoch} items={}", join(&bundle.public.items));
    Ok(())
}

pub fn tune(cfg: &RunConfig, csv: Option<&Path>) -> Result<(), Failure> {
    let budgets = Budgets::of_config(&cfg.ivf)?;
    let w = Workload { dim: cfg.ivf.dim, top_k: cfg.ivf.top_k, t_cmp: cfg.field.t_cmp() };
    let candidates: Vec<usize> = cfg
        .codebook_sizes
        .iter()
        .copied()
        .filter(|&k| budgets.sub_quantizers(k).is_ok_and(|m| cfg.ivf.dim.is_multiple_of(m)))
        .collect();
    let n_list_max = if cfg.n_list_max == 0 { budgets.capacity } else { cfg.n_list_max };
    let constants = Calibration::default_for(cfg.variant).constants;
    let estimate = |n_list, k| gate_count(&w, n_list, k, &budgets, cfg.variant, &constants);
    let result = pruned_search(&budgets, n_list_max, &candidates, |n_list, k| Ok(estimate(n_list, k)?.gates))?;
    println!("budgets N={} B={} N_sel={} variant={}", budgets.capacity, budgets.code_bits, budgets.n_sel, cfg.variant);
    println!("{:>8} {:>6} {:>10} {:>10}", "n_list", "K", "G", "G_B");
    for p in &result.explored {
        println!("{:>8} {:>6} {:>10} {:>10}", p.n_list, p.codebook_size, p.gates, p.bin);
    }
    println!("best n_list={} K={} G_B={}", result.n_list_star, result.k_star, result.bin_star);
    if let Some(path) = csv {
        let rows = result
            .explored
            .iter()
            .map(|p| {
                Ok((budgets.derive(w.dim, w.top_k, p.n_list, p.codebook_size)?, estimate(p.n_list, p.codebook_size)?))
            })
            .collect::<v3db::Result<Vec<_>>>()?;
        fs::write(path, grid_csv(&rows))?;
    }
    Ok(())
}

pub fn gates(cli: &Cli, cfg: &RunConfig, measure: bool) -> Result<(), Failure> {
    let shape = CircuitShape::new(cfg.ivf, cfg.field, cfg.coord_max()?)?;
    let estimate = Calibration::default_for(cfg.variant).estimate(&cfg.ivf, cfg.field.t_cmp());
    println!("{estimate}");
    if measure {
        let stats = circuit_stats(&shape, cfg.variant)?;
        println!("measured G={} G_B={}", stats.gates, stats.bin);
        if cli.debug {
            print!("{}", stats.breakdown);
        }
    }
    Ok(())
}
