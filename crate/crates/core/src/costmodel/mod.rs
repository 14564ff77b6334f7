//! Analytic gate-count model for both circuit variants, calibrated against the
//! real circuits, and the bin-pruned configuration search.
//!
//! A [`GateEstimate`] is a sum of monomials in the shape parameters, one per
//! dominant cost term of the query semantics and of snapshot binding, each scaled
//! by a nonnegative constant. Binding monomials that coincide with a query
//! monomial share its constant.

mod calibrate;
mod search;

pub use calibrate::{calibrate, default_calibration_set, fit_proving_time, nnls, Calibration, ProvingTimeFit};
pub use search::{exhaustive_search, grid_csv, local_minima, pruned_search, GridPoint, TuneResult};

use std::fmt;

use crate::config::{IvfPqConfig, Variant};
use crate::error::{Error, Result};
use crate::proving::bin;

/// Number of cost terms of either variant.
pub const NUM_TERMS: usize = 10;

/// One summand of the estimate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Term {
    /// `n_list * D`: centroid distances and list-entry hashing.
    CentroidDistances,
    /// Baseline `n_probe * n_list * t_cmp`, multiset `n_list * t_cmp`.
    ProbeSelect,
    /// `n_probe * K * D`: ADC tables.
    AdcTables,
    /// Baseline `n_probe * n * M * K`, multiset `t_cmp * n_probe * M * max(K, n)`.
    CandidateScoring,
    /// Baseline `k * n_probe * n * t_cmp`, multiset `n_probe * n * t_cmp`.
    TopK,
    /// `K * D`: codebook digest.
    CodebookDigest,
    /// `n_probe * n * M`: opened records.
    OpenedRecords,
    /// `n_probe * D`: opened centroids.
    OpenedCentroids,
    /// `n_probe * log2 n_list`: Merkle authentication paths.
    MerklePaths,
    /// Constant rows independent of the shape.
    Fixed,
}

impl Term {
    pub const ALL: [Term; NUM_TERMS] = [
        Term::CentroidDistances,
        Term::ProbeSelect,
        Term::AdcTables,
        Term::CandidateScoring,
        Term::TopK,
        Term::CodebookDigest,
        Term::OpenedRecords,
        Term::OpenedCentroids,
        Term::MerklePaths,
        Term::Fixed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Term::CentroidDistances => "centroid_distances",
            Term::ProbeSelect => "probe_select",
            Term::AdcTables => "adc_tables",
            Term::CandidateScoring => "candidate_scoring",
            Term::TopK => "topk",
            Term::CodebookDigest => "codebook_digest",
            Term::OpenedRecords => "opened_records",
            Term::OpenedCentroids => "opened_centroids",
            Term::MerklePaths => "merkle_paths",
            Term::Fixed => "fixed",
        }
    }

    /// Whether the term belongs to the binding subcircuit.
    pub fn is_binding(self) -> bool {
        matches!(self, Term::CodebookDigest | Term::OpenedRecords | Term::OpenedCentroids | Term::MerklePaths)
    }
}

/// Shape parameters that enter the monomials.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CostShape {
    pub dim: usize,
    pub n_list: usize,
    pub n_probe: usize,
    pub capacity: usize,
    pub sub_quantizers: usize,
    pub codebook_size: usize,
    pub top_k: usize,
    pub t_cmp: u32,
}

impl CostShape {
    pub fn from_config(c: &IvfPqConfig, t_cmp: u32) -> Self {
        CostShape {
            dim: c.dim,
            n_list: c.n_list,
            n_probe: c.n_probe,
            capacity: c.capacity,
            sub_quantizers: c.sub_quantizers,
            codebook_size: c.codebook_size,
            top_k: c.top_k,
            t_cmp,
        }
    }

    /// Unscaled value of every term, in [`Term::ALL`] order.
    pub fn monomials(&self, variant: Variant) -> [f64; NUM_TERMS] {
        let [d, nl, np, n, m, k, top, t] = [
            self.dim,
            self.n_list,
            self.n_probe,
            self.capacity,
            self.sub_quantizers,
            self.codebook_size,
            self.top_k,
            self.t_cmp as usize,
        ]
        .map(|x| x as f64);
        let log_nl = (self.n_list as f64).log2();
        let (probe, scoring, topk) = match variant {
            Variant::Baseline => (np * nl * t, np * n * m * k, top * np * n * t),
            Variant::Multiset => (nl * t, t * np * m * k.max(n), np * n * t),
        };
        [nl * d, probe, np * k * d, scoring, topk, k * d, np * n * m, np * d, np * log_nl, 1.0]
    }
}

/// Nonnegative multiplier per term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Constants(pub [f64; NUM_TERMS]);

impl Constants {
    pub fn ones() -> Self {
        Constants([1.0; NUM_TERMS])
    }

    pub fn get(&self, term: Term) -> f64 {
        self.0[Term::ALL.iter().position(|&t| t == term).expect("listed term")]
    }
}

/// Estimated gate rows, itemized.
#[derive(Clone, Debug, PartialEq)]
pub struct GateEstimate {
    pub variant: Variant,
    pub terms: [(Term, f64); NUM_TERMS],
    /// `ceil` of the sum of the terms.
    pub gates: usize,
    pub bin: usize,
}

impl GateEstimate {
    pub fn evaluate(shape: &CostShape, variant: Variant, constants: &Constants) -> Self {
        let mono = shape.monomials(variant);
        let mut terms = [(Term::Fixed, 0.0); NUM_TERMS];
        for (i, slot) in terms.iter_mut().enumerate() {
            *slot = (Term::ALL[i], constants.0[i] * mono[i]);
        }
        let total: f64 = terms.iter().map(|(_, v)| v).sum();
        let gates = (total.ceil() as usize).max(1);
        GateEstimate { variant, terms, gates, bin: bin(gates) }
    }

    pub fn term(&self, term: Term) -> f64 {
        self.terms.iter().find(|(t, _)| *t == term).map_or(0.0, |(_, v)| *v)
    }

    /// Sum of the binding terms.
    pub fn binding(&self) -> f64 {
        self.terms.iter().filter(|(t, _)| t.is_binding()).map(|(_, v)| v).sum()
    }
}

impl fmt::Display for GateEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (term, value) in &self.terms {
            writeln!(f, "term name={} value={value:.1}", term.name())?;
        }
        write!(f, "total G={} G_B={}", self.gates, self.bin)
    }
}

/// Fixed capacity, code and scan budgets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budgets {
    /// Padded capacity `N = n_list * n`.
    pub capacity: usize,
    /// Code budget `B = M * log2 K`.
    pub code_bits: usize,
    /// Scan budget `N_sel = n_probe * n = r * N`.
    pub n_sel: usize,
}

impl Budgets {
    /// Budgets from a probing ratio `r = num / den`.
    pub fn with_ratio(capacity: usize, code_bits: usize, num: usize, den: usize) -> Result<Self> {
        if den == 0 || !(capacity * num).is_multiple_of(den) {
            return Err(Error::InfeasibleBudgets(format!("N * r = {capacity} * {num}/{den} is not integral")));
        }
        Self::new(capacity, code_bits, capacity * num / den)
    }

    pub fn new(capacity: usize, code_bits: usize, n_sel: usize) -> Result<Self> {
        if !capacity.is_power_of_two() || !n_sel.is_power_of_two() || n_sel > capacity || code_bits == 0 {
            return Err(Error::InfeasibleBudgets(format!(
                "need powers of two N_sel <= N and B > 0, got N = {capacity}, N_sel = {n_sel}, B = {code_bits}"
            )));
        }
        Ok(Budgets { capacity, code_bits, n_sel })
    }

    pub fn of_config(c: &IvfPqConfig) -> Result<Self> {
        Self::new(c.n_list * c.capacity, c.code_bits(), c.n_sel())
    }

    /// Probing ratio `r = N_sel / N`.
    pub fn ratio(&self) -> f64 {
        self.n_sel as f64 / self.capacity as f64
    }

    /// Smallest feasible `n_list`, where `n_probe = 1`.
    pub fn min_lists(&self) -> usize {
        self.capacity / self.n_sel
    }

    /// Sub-quantizers `M = B / log2 K`.
    pub fn sub_quantizers(&self, codebook_size: usize) -> Result<usize> {
        let log_k = codebook_size.trailing_zeros();
        if !codebook_size.is_power_of_two() || log_k == 0 || !self.code_bits.is_multiple_of(log_k as usize) {
            return Err(Error::NonIntegralDerivedParam { budget: self.code_bits, log_k });
        }
        Ok(self.code_bits / log_k as usize)
    }

    /// The concrete configuration for `(n_list, K)`; all `N` slots count as real vectors.
    pub fn derive(&self, dim: usize, top_k: usize, n_list: usize, codebook_size: usize) -> Result<IvfPqConfig> {
        if !n_list.is_power_of_two() || n_list < self.min_lists() || n_list > self.capacity {
            return Err(Error::InfeasibleBudgets(format!(
                "n_list = {n_list} outside [{}, {}]",
                self.min_lists(),
                self.capacity
            )));
        }
        let capacity = self.capacity / n_list;
        let config = IvfPqConfig {
            n0: self.capacity,
            dim,
            n_list,
            n_probe: self.n_sel / capacity,
            capacity,
            sub_quantizers: self.sub_quantizers(codebook_size)?,
            codebook_size,
            top_k,
        };
        config.validate()?;
        Ok(config)
    }
}

/// Parameters held fixed while searching over `(n_list, K)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Workload {
    pub dim: usize,
    pub top_k: usize,
    pub t_cmp: u32,
}

/// Gate estimate for `(n_list, K)` under fixed budgets.
pub fn gate_count(
    w: &Workload,
    n_list: usize,
    codebook_size: usize,
    budgets: &Budgets,
    variant: Variant,
    constants: &Constants,
) -> Result<GateEstimate> {
    let config = budgets.derive(w.dim, w.top_k, n_list, codebook_size)?;
    Ok(GateEstimate::evaluate(&CostShape::from_config(&config, w.t_cmp), variant, constants))
}
