//! End-to-end query circuits: construction, proving and verification.

mod baseline;
mod layout;
mod multiset;
mod witness;

use plonky2::iop::generator::generate_partial_witness;
use plonky2::plonk::circuit_data::CircuitData;
use plonky2::plonk::proof::ProofWithPublicInputs;
use plonky2::util::serialization::{Buffer, Read, Remaining, Write};
use sha2::{Digest as _, Sha256};

pub use witness::{PublicInputs, WitnessBundle};

use crate::config::{CircuitShape, Variant};
use crate::error::{Error, Result};
use crate::fixedpoint::FxVector;
use crate::gadgets::{Assignment, Backend, Circuit, Stage, Tally, BACKEND_ID, EXT};
use crate::hash::F;
use crate::shaping::Snapshot;

use layout::CommonWires;
use multiset::MultisetWires;

/// Smallest power of two `>= g`.
pub fn bin(g: usize) -> usize {
    g.max(1).next_power_of_two()
}

/// Gate accounting of one circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CircuitStats {
    pub variant: Variant,
    /// Gate rows `G` of the constructed circuit.
    pub gates: usize,
    /// `G_B = 2^ceil(log2 G)`.
    pub bin: usize,
    pub relations: u64,
    pub stages: Vec<(Stage, Tally)>,
    /// Rows outside every stage.
    pub plumbing_rows: usize,
    /// Per-gadget and per-stage records as structured text.
    pub breakdown: String,
    /// Rows of the built circuit after backend padding, when built.
    pub padded_rows: Option<usize>,
}

impl CircuitStats {
    pub fn stage_rows(&self, stage: Stage) -> usize {
        self.stages.iter().find(|(s, _)| *s == stage).map_or(0, |(_, t)| t.rows)
    }
}

/// A proof together with everything needed to check it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProofBundle {
    pub fingerprint: [u8; 32],
    pub variant: Variant,
    pub public: PublicInputs,
    pub proof: Vec<u8>,
}

/// Hash of every parameter that determines the circuit; the vector count `n0` is not one.
pub fn fingerprint(shape: &CircuitShape, variant: Variant) -> [u8; 32] {
    let c = &shape.canonical().config;
    let mut h = Sha256::new();
    h.update(b"v3db-circuit");
    h.update(BACKEND_ID.as_bytes());
    for v in [c.dim, c.n_list, c.n_probe, c.capacity, c.sub_quantizers, c.codebook_size, c.top_k] {
        h.update((v as u64).to_le_bytes());
    }
    h.update([variant.tag()]);
    h.update(shape.field.modulus_bits().to_le_bytes());
    h.update(shape.field.t_cmp().to_le_bytes());
    h.update(shape.coord_max.to_le_bytes());
    h.finalize().into()
}

struct Layout {
    common: CommonWires,
    multiset: Option<MultisetWires>,
}

fn construct(shape: &CircuitShape, variant: Variant) -> Result<(Circuit, Layout)> {
    shape.validate()?;
    let mut c = Circuit::new(shape.field);
    let common = CommonWires::alloc(&mut c, shape);
    let ms = (variant == Variant::Multiset).then(|| MultisetWires::alloc(&mut c, shape));
    let ch = ms.as_ref().map(|_| c.stage(Stage::Challenge, |c| c.challenges()));

    c.stage(Stage::Binding, |c| common.bind_snapshot(c));
    let centroid_d = c.stage(Stage::CentroidDistances, |c| common.centroid_distances(c));
    let indices = c.stage(Stage::ProbeSelect, |c| match (&ms, ch) {
        (Some(ms), Some(ch)) => ms.probe_select(c, shape, &centroid_d, ch),
        _ => Ok(baseline::probe_select(c, shape, &centroid_d)),
    })?;
    let candidates = c.stage(Stage::Binding, |c| common.open_probes(c, shape, &indices));
    let tables = c.stage(Stage::AdcTables, |c| common.adc_tables(c, shape));
    let distances = c.stage(Stage::CandidateDistances, |c| -> Result<Vec<_>> {
        let selected = match (&ms, ch) {
            (Some(ms), Some(ch)) => ms.select_entries(c, shape, &tables, &candidates, ch)?,
            _ => baseline::select_entries(c, &tables, &candidates, shape.config.capacity),
        };
        Ok(candidates
            .iter()
            .zip(&selected)
            .map(|(cand, sel)| CommonWires::masked_distance(c, cand.flag, sel))
            .collect())
    })?;
    let top = c.stage(Stage::TopK, |c| match (&ms, ch) {
        (Some(ms), Some(ch)) => ms.top_k(c, shape, &candidates, &distances, ch),
        _ => Ok(baseline::top_k(c, shape, &candidates, &distances)),
    })?;
    for (&claimed, &computed) in common.items.iter().zip(&top) {
        c.assert_eq(claimed, computed);
    }
    Ok((c, Layout { common, multiset: ms }))
}

fn stats_of(c: &Circuit, variant: Variant) -> CircuitStats {
    let gates = c.num_rows();
    let meter = c.meter();
    let stages: Vec<(Stage, Tally)> = Stage::ALL.iter().map(|&s| (s, meter.stage(s))).collect();
    let staged: usize = stages.iter().map(|(_, t)| t.rows).sum();
    CircuitStats {
        variant,
        gates,
        bin: bin(gates),
        relations: meter.total_relations(),
        stages,
        plumbing_rows: gates - staged,
        breakdown: meter.report(gates),
        padded_rows: None,
    }
}

/// Gate accounting without building the backend circuit.
pub fn circuit_stats(shape: &CircuitShape, variant: Variant) -> Result<CircuitStats> {
    let (c, _) = construct(shape, variant)?;
    Ok(stats_of(&c, variant))
}

/// A built query circuit for one shape and variant.
pub struct QueryCircuit {
    shape: CircuitShape,
    variant: Variant,
    layout: Layout,
    data: CircuitData<F, Backend, EXT>,
    stats: CircuitStats,
    fingerprint: [u8; 32],
}

impl QueryCircuit {
    pub fn build(shape: &CircuitShape, variant: Variant) -> Result<Self> {
        let (c, layout) = construct(shape, variant)?;
        let mut stats = stats_of(&c, variant);
        let (builder, _) = c.into_parts();
        let data = builder.build::<Backend>();
        stats.padded_rows = Some(data.common.degree());
        Ok(QueryCircuit { shape: *shape, variant, layout, data, stats, fingerprint: fingerprint(shape, variant) })
    }

    pub fn shape(&self) -> &CircuitShape {
        &self.shape
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn stats(&self) -> &CircuitStats {
        &self.stats
    }

    pub fn fingerprint(&self) -> [u8; 32] {
        self.fingerprint
    }

    fn assignment(&self, w: &WitnessBundle) -> Result<Assignment> {
        w.check_shape(&self.shape)?;
        let mut a = Assignment::new();
        self.layout.common.assign(&mut a, w, &self.shape)?;
        if let Some(ms) = &self.layout.multiset {
            ms.assign(&mut a, w, &self.shape)?;
        }
        Ok(a)
    }

    /// Runs witness generation, which enforces every copy constraint, without proving.
    pub fn check_witness(&self, w: &WitnessBundle) -> Result<()> {
        let a = self.assignment(w)?;
        generate_partial_witness::<F, Backend, EXT>(a.inner, &self.data.prover_only, &self.data.common)
            .map(|_| ())
            .map_err(|e| Error::WitnessInconsistent(e.to_string()))
    }

    pub fn prove_witness(&self, w: &WitnessBundle) -> Result<ProofBundle> {
        let a = self.assignment(w)?;
        let proof = self.data.prove(a.inner).map_err(|e| Error::Prover(e.to_string()))?;
        if proof.public_inputs != w.public.to_field_elements() {
            return Err(Error::WitnessInconsistent("public inputs differ from the statement".into()));
        }
        let mut bytes = Vec::new();
        bytes.write_proof(&proof.proof).map_err(|e| Error::Prover(format!("{e:?}")))?;
        Ok(ProofBundle { fingerprint: self.fingerprint, variant: self.variant, public: w.public.clone(), proof: bytes })
    }

    /// Proves the reference answer of `q` over `s`.
    pub fn prove(&self, s: &Snapshot, q: &FxVector) -> Result<ProofBundle> {
        if s.shape()?.canonical() != self.shape.canonical() {
            return Err(Error::FingerprintMismatch);
        }
        self.prove_witness(&WitnessBundle::new(s, q)?)
    }

    /// Accepts with `Ok(())`; rejection is [`Error::Rejected`] or a malformed proof.
    pub fn verify(&self, bundle: &ProofBundle) -> Result<()> {
        if bundle.fingerprint != self.fingerprint || bundle.variant != self.variant {
            return Err(Error::FingerprintMismatch);
        }
        bundle.public.check(&self.shape).map_err(|e| Error::Rejected(e.to_string()))?;
        let mut buf = Buffer::new(&bundle.proof);
        let proof = buf
            .read_proof::<F, Backend, EXT>(&self.data.common)
            .map_err(|_| Error::malformed("proof", "undecodable proof bytes"))?;
        if buf.remaining() != 0 {
            return Err(Error::malformed("proof", "trailing bytes"));
        }
        let public_inputs = bundle.public.to_field_elements();
        self.data.verify(ProofWithPublicInputs { proof, public_inputs }).map_err(|e| Error::Rejected(e.to_string()))
    }
}
