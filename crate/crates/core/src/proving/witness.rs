use crate::commitment::{Commitment, CommitmentTree, ListOpening};
use crate::config::CircuitShape;
use crate::error::{Error, Result};
use crate::fixedpoint::FxVector;
use crate::hash::{felt, Digest, F};
use crate::semantics::{
    step1_centroid_distances, step2_probe_select, step3_adc_tables, step4_candidate_distances, step5_topk, ProbeSet,
};
use crate::shaping::{Codebooks, Snapshot};

/// The public statement: a commitment, a query and the claimed items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PublicInputs {
    pub com: Commitment,
    pub q: FxVector,
    pub items: Vec<u64>,
}

impl PublicInputs {
    /// Field encoding in circuit order: `root_mk`, `root_cb`, `q`, `items`.
    pub fn to_field_elements(&self) -> Vec<F> {
        let mut out = Vec::with_capacity(8 + self.q.dim() + self.items.len());
        out.extend(self.com.root_mk.elements());
        out.extend(self.com.root_cb.elements());
        out.extend(self.q.coords().iter().map(|&x| felt(x)));
        out.extend(self.items.iter().map(|&x| felt(x)));
        out
    }

    /// Off-circuit checks the verifier performs before touching the proof.
    pub fn check(&self, shape: &CircuitShape) -> Result<()> {
        if self.q.dim() != shape.config.dim {
            return Err(Error::DimensionMismatch { expected: shape.config.dim, got: self.q.dim() });
        }
        if let Some(&value) = self.q.coords().iter().find(|&&x| x > shape.coord_max) {
            return Err(Error::ResidualOutOfRange { value, max: shape.coord_max });
        }
        if self.items.len() != shape.config.top_k {
            return Err(Error::LengthMismatch { left: self.items.len(), right: shape.config.top_k });
        }
        Ok(())
    }
}

/// Everything the prover feeds into a query circuit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WitnessBundle {
    pub public: PublicInputs,
    pub centroids: Vec<FxVector>,
    pub list_roots: Vec<Digest>,
    pub codebooks: Codebooks,
    /// Openings of the probed lists, in probe order.
    pub openings: Vec<ListOpening>,
    /// All `(list, distance)` pairs in sorted order.
    pub probe_order: Vec<(usize, u64)>,
    /// All `(item, distance)` candidate pairs in sorted order.
    pub candidate_order: Vec<(u64, u64)>,
    /// Selected table entries by probe, slot, sub-quantizer.
    pub selected: Vec<u64>,
}

impl WitnessBundle {
    /// Runs the query off-circuit and harvests its trace.
    pub fn new(s: &Snapshot, q: &FxVector) -> Result<Self> {
        let distances = step1_centroid_distances(q, s)?;
        Self::with_probe_order(s, q, step2_probe_select(&distances, s.config.n_probe).sorted_pairs)
    }

    /// Trace of a query that probes the first `n_probe` lists of `probe_order`.
    ///
    /// The honest order comes from [`WitnessBundle::new`]; any other order yields a
    /// witness the circuits must reject.
    pub fn with_probe_order(s: &Snapshot, q: &FxVector, probe_order: Vec<(usize, u64)>) -> Result<Self> {
        s.validate()?;
        let tree = CommitmentTree::new(s)?;
        let indices: Vec<usize> = probe_order.iter().take(s.config.n_probe).map(|&(i, _)| i).collect();
        if let Some(&index) = indices.iter().find(|&&i| i >= s.config.n_list) {
            return Err(Error::IndexOutOfRange { index, len: s.config.n_list });
        }
        let probes = ProbeSet { indices, sorted_pairs: probe_order };
        let tables = step3_adc_tables(q, s, &probes)?;
        let candidates = step4_candidate_distances(s, &probes, &tables)?;
        let (items, _, sorted) = step5_topk(&candidates, s.config.top_k);
        let openings = probes.indices.iter().map(|&i| tree.open(s, i)).collect::<Result<Vec<_>>>()?;
        let mut selected = Vec::with_capacity(s.config.n_sel() * s.config.sub_quantizers);
        for (p, &i) in probes.indices.iter().enumerate() {
            for rec in &s.lists[i] {
                selected.extend(rec.code.iter().enumerate().map(|(m, &v)| tables.get(p, m, v as usize)));
            }
        }
        Ok(WitnessBundle {
            public: PublicInputs { com: tree.commitment, q: q.clone(), items },
            centroids: s.centroids.clone(),
            list_roots: tree.list_roots.clone(),
            codebooks: s.codebooks.clone(),
            openings,
            probe_order: probes.sorted_pairs,
            candidate_order: sorted.iter().map(|c| (c.item, c.distance)).collect(),
            selected,
        })
    }

    /// Checks that every part has the size the circuit expects.
    pub fn check_shape(&self, shape: &CircuitShape) -> Result<()> {
        let c = &shape.config;
        self.public.check(shape)?;
        let sizes = [
            (self.centroids.len(), c.n_list),
            (self.list_roots.len(), c.n_list),
            (self.openings.len(), c.n_probe),
            (self.probe_order.len(), c.n_list),
            (self.candidate_order.len(), c.n_sel()),
            (self.selected.len(), c.n_sel() * c.sub_quantizers),
            (self.codebooks.flat().len(), c.sub_quantizers * c.codebook_size * c.sub_dim()),
        ];
        if let Some(&(left, right)) = sizes.iter().find(|(a, b)| a != b) {
            return Err(Error::LengthMismatch { left, right });
        }
        for o in &self.openings {
            if o.records.len() != c.capacity || o.auth_path.len() != c.list_depth() || o.centroid.dim() != c.dim {
                return Err(Error::malformed("opening", "wrong record count, path length or dimension"));
            }
            if o.centroid.max_coord() > shape.coord_max {
                return Err(Error::ResidualOutOfRange { value: o.centroid.max_coord(), max: shape.coord_max });
            }
            if o.records.iter().any(|r| r.code.len() != c.sub_quantizers) {
                return Err(Error::malformed("opening", "wrong code length"));
            }
        }
        if self.codebooks.flat().iter().any(|&w| w > 2 * shape.residual_offset()) {
            return Err(Error::malformed("witness", "codeword outside the residual range"));
        }
        if self.centroids.iter().any(|mu| mu.dim() != c.dim) {
            return Err(Error::malformed("witness", "centroid dimension"));
        }
        Ok(())
    }
}
