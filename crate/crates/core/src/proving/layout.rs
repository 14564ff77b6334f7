//! Wires and constraints shared by both circuit variants: public inputs, the
//! committed snapshot, the binding subcircuit and the arithmetic kernels.

use crate::commitment::{code_field_bits, codes_per_word, pack_codes};
use crate::config::CircuitShape;
use crate::error::Result;
use crate::gadgets::{Assignment, Circuit, DigestWires, Role, Wire};
use crate::hash::Domain;

use super::witness::WitnessBundle;

pub(crate) struct RecordWires {
    pub flag: Wire,
    pub item: Wire,
    pub words: Vec<Wire>,
}

/// Opening of one probed list.
pub(crate) struct ProbeWires {
    pub centroid: Vec<Wire>,
    pub records: Vec<RecordWires>,
    pub path: Vec<DigestWires>,
}

/// One scored candidate slot.
pub(crate) struct CandidateWires {
    pub item: Wire,
    pub flag: Wire,
    pub codes: Vec<Wire>,
}

pub(crate) struct CommonWires {
    pub root_mk: DigestWires,
    pub root_cb: DigestWires,
    pub q: Vec<Wire>,
    pub items: Vec<Wire>,
    pub codewords: Vec<Wire>,
    pub centroids: Vec<Vec<Wire>>,
    pub list_roots: Vec<DigestWires>,
    pub probes: Vec<ProbeWires>,
}

fn digest(c: &mut Circuit, role: Role) -> DigestWires {
    DigestWires([(); 4].map(|_| c.witness(role)))
}

fn public_digest(c: &mut Circuit) -> DigestWires {
    DigestWires([(); 4].map(|_| c.public_input()))
}

fn words_per_record(shape: &CircuitShape) -> usize {
    match codes_per_word(shape.config.codebook_size) {
        0 => 0,
        per => shape.config.sub_quantizers.div_ceil(per),
    }
}

impl CommonWires {
    /// Public inputs first, in statement order, then the committed snapshot.
    pub fn alloc(c: &mut Circuit, shape: &CircuitShape) -> Self {
        let cfg = &shape.config;
        let root_mk = public_digest(c);
        let root_cb = public_digest(c);
        let q = c.public_inputs(cfg.dim);
        let items = c.public_inputs(cfg.top_k);
        let codewords = c.witnesses(Role::Bound, cfg.sub_quantizers * cfg.codebook_size * cfg.sub_dim());
        let centroids = (0..cfg.n_list).map(|_| c.witnesses(Role::Bound, cfg.dim)).collect();
        let list_roots = (0..cfg.n_list).map(|_| digest(c, Role::Bound)).collect();
        let words = words_per_record(shape);
        let probes = (0..cfg.n_probe)
            .map(|_| ProbeWires {
                centroid: c.witnesses(Role::Bound, cfg.dim),
                records: (0..cfg.capacity)
                    .map(|_| RecordWires {
                        flag: c.witness(Role::Bound),
                        item: c.witness(Role::Bound),
                        words: c.witnesses(Role::Bound, words),
                    })
                    .collect(),
                path: (0..cfg.list_depth()).map(|_| digest(c, Role::Bound)).collect(),
            })
            .collect();
        CommonWires { root_mk, root_cb, q, items, codewords, centroids, list_roots, probes }
    }

    /// Codebook digest and the tree of all list entries against the public roots.
    pub fn bind_snapshot(&self, c: &mut Circuit) {
        let cb = c.hash(Domain::Codebook, &self.codewords);
        c.assert_digest_eq(&cb, &self.root_cb);
        let entries: Vec<DigestWires> = self
            .centroids
            .iter()
            .zip(&self.list_roots)
            .enumerate()
            .map(|(i, (mu, root))| {
                let mut input = vec![c.constant(i as u64)];
                input.extend_from_slice(mu);
                input.extend_from_slice(root.wires());
                c.hash(Domain::ListEntry, &input)
            })
            .collect();
        let root = c.merkle_root(&entries);
        c.assert_digest_eq(&root, &self.root_mk);
    }

    /// Opens every probed list at its index and returns the candidates in probe-major order.
    pub fn open_probes(&self, c: &mut Circuit, shape: &CircuitShape, indices: &[Wire]) -> Vec<CandidateWires> {
        let cfg = &shape.config;
        let field_bits = code_field_bits(cfg.codebook_size);
        let per_word = codes_per_word(cfg.codebook_size);
        let mut candidates = Vec::with_capacity(cfg.n_sel());
        for (probe, &index) in self.probes.iter().zip(indices) {
            let position = c.split_bits(index, cfg.list_depth());
            let mut leaves = Vec::with_capacity(cfg.capacity);
            for (j, rec) in probe.records.iter().enumerate() {
                c.assert_bool(rec.flag);
                let codes = c.scope("code_unpack", |c| {
                    if per_word == 0 {
                        let zero = c.zero();
                        return vec![zero; cfg.sub_quantizers];
                    }
                    let mut codes = Vec::with_capacity(cfg.sub_quantizers);
                    for (w, &word) in rec.words.iter().enumerate() {
                        let count = per_word.min(cfg.sub_quantizers - w * per_word);
                        let bits = c.split_bits(word, count * field_bits);
                        for field in bits.chunks(field_bits) {
                            let code = field[..field_bits - 1]
                                .iter()
                                .rev()
                                .fold(field[field_bits - 1].wire(), |acc, b| c.mul_const_add(2, acc, b.wire()));
                            codes.push(code);
                        }
                    }
                    codes
                });
                let mut input = vec![index, c.constant(j as u64), rec.flag, rec.item];
                input.extend_from_slice(&rec.words);
                leaves.push(c.hash(Domain::Leaf, &input));
                candidates.push(CandidateWires { item: rec.item, flag: rec.flag, codes });
            }
            let root = c.merkle_root(&leaves);
            let mut input = vec![index];
            input.extend_from_slice(&probe.centroid);
            input.extend_from_slice(root.wires());
            let entry = c.hash(Domain::ListEntry, &input);
            let opened = c.merkle_open(&entry, &position, &probe.path);
            c.assert_digest_eq(&opened, &self.root_mk);
        }
        candidates
    }

    /// Squared distances from `q` to every centroid, each range-checked.
    pub fn centroid_distances(&self, c: &mut Circuit) -> Vec<Wire> {
        let bits = c.field().t_cmp() as usize - 1;
        self.centroids
            .iter()
            .map(|mu| {
                let zero = c.zero();
                let d = self.q.iter().zip(mu).fold(zero, |acc, (&x, &m)| c.sq_diff_add(x, m, acc));
                c.range_check(d, bits);
                d
            })
            .collect()
    }

    /// `LUT[p][m][k]` for every probe: block distances from the shifted residual to each codeword.
    pub fn adc_tables(&self, c: &mut Circuit, shape: &CircuitShape) -> Vec<Vec<Vec<Wire>>> {
        let cfg = &shape.config;
        let d = cfg.sub_dim();
        self.probes
            .iter()
            .map(|probe| {
                let residual: Vec<Wire> = self
                    .q
                    .iter()
                    .zip(&probe.centroid)
                    .map(|(&x, &m)| {
                        let diff = c.sub(x, m);
                        c.add_const(diff, shape.residual_offset())
                    })
                    .collect();
                (0..cfg.sub_quantizers)
                    .map(|m| {
                        (0..cfg.codebook_size)
                            .map(|k| {
                                let word = &self.codewords[(m * cfg.codebook_size + k) * d..][..d];
                                let zero = c.zero();
                                word.iter()
                                    .zip(&residual[m * d..(m + 1) * d])
                                    .fold(zero, |acc, (&w, &r)| c.sq_diff_add(w, r, acc))
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// `D = f * (sum - d_max) + d_max`, range-checked below `2^(t-1)`.
    pub fn masked_distance(c: &mut Circuit, flag: Wire, selected: &[Wire]) -> Wire {
        let d_max = c.field().d_max();
        let bits = c.field().t_cmp() as usize - 1;
        let sum = c.sum(selected);
        let dm = c.constant(d_max);
        let shifted = c.sub(sum, dm);
        let out = c.mul_add(flag, shifted, dm);
        c.range_check(out, bits);
        out
    }

    pub fn assign(&self, a: &mut Assignment, w: &WitnessBundle, shape: &CircuitShape) -> Result<()> {
        let k = shape.config.codebook_size;
        a.set_digest(&self.root_mk, &w.public.com.root_mk)?;
        a.set_digest(&self.root_cb, &w.public.com.root_cb)?;
        a.set_all(&self.q, w.public.q.coords())?;
        a.set_all(&self.items, &w.public.items)?;
        a.set_all(&self.codewords, w.codebooks.flat())?;
        for (ws, mu) in self.centroids.iter().zip(&w.centroids) {
            a.set_all(ws, mu.coords())?;
        }
        for (ws, root) in self.list_roots.iter().zip(&w.list_roots) {
            a.set_digest(ws, root)?;
        }
        for (probe, opening) in self.probes.iter().zip(&w.openings) {
            a.set_all(&probe.centroid, opening.centroid.coords())?;
            for (rw, rec) in probe.records.iter().zip(&opening.records) {
                a.set(rw.flag, rec.flag())?;
                a.set(rw.item, rec.item)?;
                a.set_all(&rw.words, &pack_codes(&rec.code, k))?;
            }
            for (pw, d) in probe.path.iter().zip(&opening.auth_path) {
                a.set_digest(pw, d)?;
            }
        }
        Ok(())
    }
}
