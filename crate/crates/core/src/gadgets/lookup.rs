//! Table lookup by indicator decomposition.

use anyhow::Result as AnyResult;
use plonky2::field::types::{Field, PrimeField64};
use plonky2::iop::generator::{GeneratedValues, SimpleGenerator};
use plonky2::iop::target::Target;
use plonky2::iop::witness::{PartitionWitness, Witness, WitnessWrite};
use plonky2::plonk::circuit_data::CommonCircuitData;
use plonky2::util::serialization::{Buffer, IoResult, Read, Write};

use super::{Circuit, Role, Wire, EXT};
use crate::hash::F;

/// Sets `sel[j] = [idx == j]`; all zero when `idx` is out of range.
#[derive(Debug, Default)]
struct OneHotGenerator {
    idx: Target,
    sel: Vec<Target>,
}

impl SimpleGenerator<F, EXT> for OneHotGenerator {
    fn id(&self) -> String {
        "OneHotGenerator".to_string()
    }

    fn dependencies(&self) -> Vec<Target> {
        vec![self.idx]
    }

    fn run_once(&self, witness: &PartitionWitness<F>, out: &mut GeneratedValues<F>) -> AnyResult<()> {
        let idx = witness.get_target(self.idx).to_canonical_u64();
        for (j, &s) in self.sel.iter().enumerate() {
            out.set_target(s, F::from_bool(idx == j as u64))?;
        }
        Ok(())
    }

    fn serialize(&self, dst: &mut Vec<u8>, _common: &CommonCircuitData<F, EXT>) -> IoResult<()> {
        dst.write_target(self.idx)?;
        dst.write_target_vec(&self.sel)
    }

    fn deserialize(src: &mut Buffer, _common: &CommonCircuitData<F, EXT>) -> IoResult<Self> {
        let idx = src.read_target()?;
        let sel = src.read_target_vec()?;
        Ok(Self { idx, sel })
    }
}

impl Circuit {
    /// `table[idx]` through prover-chosen selectors: each boolean, summing to one,
    /// with `sel_j * (idx - j) = 0`. No witness exists for `idx >= table.len()`.
    pub fn lookup(&mut self, table: &[Wire], idx: Wire) -> Wire {
        assert!(!table.is_empty(), "lookup table must not be empty");
        self.scope("lookup", |c| {
            let sel = c.witnesses(Role::Free, table.len());
            c.builder().add_simple_generator(OneHotGenerator { idx: idx.0, sel: sel.iter().map(|w| w.0).collect() });
            let bits: Vec<_> = sel.iter().map(|&s| c.assert_bool(s)).collect();
            let total = c.sum(&sel);
            let one = c.one();
            c.assert_eq(total, one);
            let mut out = None;
            for (j, (&s, &entry)) in sel.iter().zip(table).enumerate() {
                let shifted = c.add_const(idx, (-F::from_canonical_usize(j)).to_canonical_u64());
                let gated = c.mul(bits[j].wire(), shifted);
                c.assert_zero(gated);
                out = Some(match out {
                    None => c.mul(s, entry),
                    Some(acc) => c.mul_add(s, entry, acc),
                });
            }
            out.expect("non-empty table")
        })
    }
}
