//! Binary files: snapshots (`V3DBSNP`), commitments (`V3DBCOM`) and proof
//! bundles (`V3DBPRF`).
//!
//! Every file starts with a 7-byte magic and a `u32` format version. Integers
//! are little-endian; variable-length sequences carry a `u64` length prefix.
//! Decoding rejects unknown versions, truncation and trailing bytes.

use crate::commitment::Commitment;
use crate::config::{IvfPqConfig, Variant};
use crate::error::{Error, Result};
use crate::fixedpoint::{FieldSpec, FxScale, FxVector};
use crate::hash::Digest;
use crate::proving::{ProofBundle, PublicInputs};
use crate::shaping::{Codebooks, SlotRecord, Snapshot};

pub const SNAPSHOT_MAGIC: &[u8; 7] = b"V3DBSNP";
pub const COMMITMENT_MAGIC: &[u8; 7] = b"V3DBCOM";
pub const PROOF_MAGIC: &[u8; 7] = b"V3DBPRF";
pub const FORMAT_VERSION: u32 = 1;

/// Upper bound on any decoded sequence length, against hostile length prefixes.
const MAX_LEN: u64 = 1 << 32;

struct Writer(Vec<u8>);

impl Writer {
    fn new(magic: &[u8; 7]) -> Self {
        let mut w = Writer(magic.to_vec());
        w.u32(FORMAT_VERSION);
        w
    }

    fn u8(&mut self, v: u8) {
        self.0.push(v);
    }

    fn u32(&mut self, v: u32) {
        self.0.extend(v.to_le_bytes());
    }

    fn u64(&mut self, v: u64) {
        self.0.extend(v.to_le_bytes());
    }

    fn f64(&mut self, v: f64) {
        self.0.extend(v.to_le_bytes());
    }

    fn len(&mut self, n: usize) {
        self.u64(n as u64);
    }

    fn u64s(&mut self, vs: &[u64]) {
        self.len(vs.len());
        vs.iter().for_each(|&v| self.u64(v));
    }

    fn bytes(&mut self, bs: &[u8]) {
        self.len(bs.len());
        self.0.extend_from_slice(bs);
    }

    fn digest(&mut self, d: &Digest) {
        self.bytes(&d.to_bytes());
    }
}

struct Reader<'a> {
    what: &'static str,
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn new(what: &'static str, magic: &[u8; 7], buf: &'a [u8]) -> Result<Self> {
        let mut r = Reader { what, buf };
        if r.take(7)? != magic {
            return Err(r.err("bad magic"));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(r.err(format!("unsupported version {version}")));
        }
        Ok(r)
    }

    fn err(&self, reason: impl Into<String>) -> Error {
        Error::malformed(self.what, reason)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(self.err("truncated"));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }

    fn usize(&mut self) -> Result<usize> {
        let v = self.u64()?;
        usize::try_from(v).map_err(|_| self.err("value does not fit in usize"))
    }

    fn len(&mut self) -> Result<usize> {
        let n = self.u64()?;
        if n > MAX_LEN || n > self.buf.len() as u64 {
            return Err(self.err(format!("length prefix {n} exceeds the remaining input")));
        }
        Ok(n as usize)
    }

    fn u64s(&mut self) -> Result<Vec<u64>> {
        let n = self.len()?;
        (0..n).map(|_| self.u64()).collect()
    }

    fn bytes(&mut self) -> Result<&'a [u8]> {
        let n = self.len()?;
        self.take(n)
    }

    fn digest(&mut self) -> Result<Digest> {
        let bytes = self.bytes()?;
        Digest::from_bytes(bytes).ok_or_else(|| self.err("invalid digest"))
    }

    fn finish(self) -> Result<()> {
        if self.buf.is_empty() {
            Ok(())
        } else {
            Err(self.err(format!("{} trailing bytes", self.buf.len())))
        }
    }
}

fn write_config(w: &mut Writer, c: &IvfPqConfig) {
    for v in [c.n0, c.dim, c.n_list, c.n_probe, c.capacity, c.sub_quantizers, c.codebook_size, c.top_k] {
        w.len(v);
    }
}

fn read_config(r: &mut Reader) -> Result<IvfPqConfig> {
    Ok(IvfPqConfig {
        n0: r.usize()?,
        dim: r.usize()?,
        n_list: r.usize()?,
        n_probe: r.usize()?,
        capacity: r.usize()?,
        sub_quantizers: r.usize()?,
        codebook_size: r.usize()?,
        top_k: r.usize()?,
    })
}

fn write_commitment_body(w: &mut Writer, com: &Commitment) {
    w.digest(&com.root_mk);
    w.digest(&com.root_cb);
}

fn read_commitment_body(r: &mut Reader) -> Result<Commitment> {
    Ok(Commitment { root_mk: r.digest()?, root_cb: r.digest()? })
}

pub fn encode_snapshot(s: &Snapshot) -> Vec<u8> {
    let mut w = Writer::new(SNAPSHOT_MAGIC);
    write_config(&mut w, &s.config);
    w.u32(s.field.modulus_bits());
    w.u32(s.field.t_cmp());
    w.u32(s.scale.bits());
    w.f64(s.scale.v_max());
    w.u8(s.scale.signed() as u8);
    w.len(s.centroids.len());
    for mu in &s.centroids {
        w.u64s(mu.coords());
    }
    w.len(s.lists.len());
    for list in &s.lists {
        w.len(list.len());
        for rec in list {
            w.u8(rec.valid as u8);
            w.u64(rec.item);
            w.len(rec.code.len());
            rec.code.iter().for_each(|&v| w.u32(v));
        }
    }
    w.len(s.codebooks.sub_quantizers());
    w.len(s.codebooks.codebook_size());
    w.len(s.codebooks.sub_dim());
    w.u64s(s.codebooks.flat());
    w.0
}

/// Decodes and validates a snapshot.
pub fn decode_snapshot(bytes: &[u8]) -> Result<Snapshot> {
    let mut r = Reader::new("snapshot", SNAPSHOT_MAGIC, bytes)?;
    let config = read_config(&mut r)?;
    let field = FieldSpec::new(r.u32()?, r.u32()?)?;
    let scale = FxScale::new(r.u32()?, r.f64()?, r.u8()? != 0)?;
    let n_centroids = r.len()?;
    let centroids = (0..n_centroids).map(|_| r.u64s().map(FxVector::from_coords)).collect::<Result<_>>()?;
    let n_lists = r.len()?;
    let mut lists = Vec::with_capacity(n_lists);
    for _ in 0..n_lists {
        let n = r.len()?;
        let mut list = Vec::with_capacity(n);
        for _ in 0..n {
            let valid = match r.u8()? {
                0 => false,
                1 => true,
                other => return Err(r.err(format!("flag byte {other}"))),
            };
            let item = r.u64()?;
            let m = r.len()?;
            let code = (0..m).map(|_| r.u32()).collect::<Result<_>>()?;
            list.push(SlotRecord { valid, item, code });
        }
        lists.push(list);
    }
    let (m, k, d) = (r.usize()?, r.usize()?, r.usize()?);
    let codebooks = Codebooks::new(m, k, d, r.u64s()?)?;
    r.finish()?;
    let s = Snapshot { config, field, scale, centroids, lists, codebooks };
    s.validate()?;
    Ok(s)
}

pub fn encode_commitment(com: &Commitment) -> Vec<u8> {
    let mut w = Writer::new(COMMITMENT_MAGIC);
    write_commitment_body(&mut w, com);
    w.0
}

pub fn decode_commitment(bytes: &[u8]) -> Result<Commitment> {
    let mut r = Reader::new("commitment", COMMITMENT_MAGIC, bytes)?;
    let com = read_commitment_body(&mut r)?;
    r.finish()?;
    Ok(com)
}

pub fn encode_proof(b: &ProofBundle) -> Vec<u8> {
    let mut w = Writer::new(PROOF_MAGIC);
    w.bytes(&b.fingerprint);
    w.u8(b.variant.tag());
    write_commitment_body(&mut w, &b.public.com);
    w.u64s(b.public.q.coords());
    w.u64s(&b.public.items);
    w.bytes(&b.proof);
    w.0
}

pub fn decode_proof(bytes: &[u8]) -> Result<ProofBundle> {
    let mut r = Reader::new("proof bundle", PROOF_MAGIC, bytes)?;
    let fingerprint: [u8; 32] = r.bytes()?.try_into().map_err(|_| r.err("fingerprint must be 32 bytes"))?;
    let tag = r.u8()?;
    let variant = Variant::from_tag(tag).ok_or_else(|| r.err(format!("unknown variant tag {tag}")))?;
    let com = read_commitment_body(&mut r)?;
    let q = FxVector::from_coords(r.u64s()?);
    let items = r.u64s()?;
    let proof = r.bytes()?.to_vec();
    r.finish()?;
    Ok(ProofBundle { fingerprint, variant, public: PublicInputs { com, q, items }, proof })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::commitment::commit_snapshot;
    use crate::fixtures::{random_snapshot, small_config};

    fn snapshot() -> Snapshot {
        random_snapshot(7, small_config(4, 4, 4, 2, 4))
    }

    #[test]
    fn snapshot_round_trips() {
        let s = snapshot();
        let bytes = encode_snapshot(&s);
        assert_eq!(&bytes[..7], SNAPSHOT_MAGIC);
        assert_eq!(decode_snapshot(&bytes).unwrap(), s);
        assert_eq!(encode_snapshot(&decode_snapshot(&bytes).unwrap()), bytes);
    }

    #[test]
    fn commitment_round_trips() {
        let com = commit_snapshot(&snapshot()).unwrap();
        let bytes = encode_commitment(&com);
        assert_eq!(bytes.len(), 7 + 4 + 2 * (8 + 32));
        assert_eq!(decode_commitment(&bytes).unwrap(), com);
    }

    #[test]
    fn proof_bundle_round_trips() {
        let b = ProofBundle {
            fingerprint: [3; 32],
            variant: Variant::Multiset,
            public: PublicInputs {
                com: commit_snapshot(&snapshot()).unwrap(),
                q: FxVector::from_coords(vec![1, 2, 3, 4]),
                items: vec![9, 8],
            },
            proof: vec![0xAB; 100],
        };
        assert_eq!(decode_proof(&encode_proof(&b)).unwrap(), b);
    }

    #[test]
    fn rejects_bad_headers_and_trailing_bytes() {
        let bytes = encode_commitment(&Commitment::default());
        let mut wrong_magic = bytes.clone();
        wrong_magic[0] = b'X';
        assert!(matches!(decode_commitment(&wrong_magic), Err(Error::Malformed { .. })));
        let mut wrong_version = bytes.clone();
        wrong_version[7] = 9;
        assert!(matches!(decode_commitment(&wrong_version), Err(Error::Malformed { .. })));
        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(matches!(decode_commitment(&trailing), Err(Error::Malformed { .. })));
        assert!(decode_snapshot(&bytes).is_err());
    }

    #[test]
    fn rejects_structurally_invalid_snapshots() {
        let mut s = snapshot();
        s.lists[0][0].code[0] = 99;
        assert!(decode_snapshot(&encode_snapshot(&s)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn truncations_never_decode(cut in 0usize..400) {
            let bytes = encode_snapshot(&snapshot());
            let cut = cut.min(bytes.len() - 1);
            prop_assert!(decode_snapshot(&bytes[..cut]).is_err());
        }

        #[test]
        fn arbitrary_bytes_never_panic(body in proptest::collection::vec(any::<u8>(), 0..256)) {
            let mut bytes = PROOF_MAGIC.to_vec();
            bytes.extend(FORMAT_VERSION.to_le_bytes());
            bytes.extend(body);
            let _ = decode_proof(&bytes);
        }
    }
}
