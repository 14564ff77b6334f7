//! Constraint-level gadgets on top of the plonky2 circuit builder.
//!
//! [`Circuit`] wraps a builder together with a [`GateMeter`]. Every primitive
//! charges its relations to the innermost open gadget scope, and every witness
//! wire is tagged with how its value is determined:
//!
//! * public wires are statement inputs;
//! * bound wires are fixed by the public commitment through hash constraints;
//! * free wires are chosen by the prover and must be absorbed into the
//!   transcript before challenges are drawn.
//!
//! [`Circuit::challenges`] hashes every public and free wire in-circuit and
//! splits the digest into the two challenges; allocating a free wire afterwards
//! panics, so no randomized column can be chosen after its challenge.

mod compare;
mod lookup;
mod meter;
mod sponge;
mod tuple;

use plonky2::field::types::Field;
use plonky2::fri::reduction_strategies::FriReductionStrategy;
use plonky2::iop::target::{BoolTarget, Target};
use plonky2::iop::witness::{PartialWitness, WitnessWrite};
use plonky2::plonk::circuit_builder::CircuitBuilder;
use plonky2::plonk::circuit_data::CircuitConfig;
use plonky2::plonk::config::PoseidonGoldilocksConfig;

pub use compare::Sweep;
pub use meter::{GateMeter, Stage, Tally};
pub use sponge::DigestWires;
pub use tuple::{inclusion_len, inclusion_witness, InclusionWires};

use crate::error::{Error, Result};
use crate::fixedpoint::FieldSpec;
use crate::hash::F;

/// Extension degree of the recursion-friendly configuration.
pub const EXT: usize = 2;
pub type Backend = PoseidonGoldilocksConfig;
pub type Builder = CircuitBuilder<F, EXT>;

/// Backend identifier recorded in circuit fingerprints.
pub const BACKEND_ID: &str = "plonky2-1.1/goldilocks/poseidon/zk/fri-arity-4";

/// Zero-knowledge configuration: hiding wires and FRI folding by 4.
pub fn circuit_config() -> CircuitConfig {
    let mut config = CircuitConfig::standard_recursion_zk_config();
    config.fri_config.reduction_strategy = FriReductionStrategy::ConstantArityBits(2, 2);
    config
}

/// Handle to one field-valued cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Wire(pub(crate) Target);

/// A wire constrained to `{0, 1}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bit(pub(crate) BoolTarget);

impl Bit {
    pub fn wire(self) -> Wire {
        Wire(self.0.target)
    }
}

/// A transcript-derived random field element.
#[derive(Clone, Copy, Debug)]
pub struct Challenge(Wire);

impl Challenge {
    pub fn wire(self) -> Wire {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    Bound,
    Free,
}

/// Values for the prover-supplied wires of one circuit.
#[derive(Default)]
pub struct Assignment {
    pub(crate) inner: PartialWitness<F>,
}

impl Assignment {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, w: Wire, value: u64) -> Result<()> {
        self.set_felt(w, F::from_noncanonical_u64(value))
    }

    pub fn set_felt(&mut self, w: Wire, value: F) -> Result<()> {
        self.inner.set_target(w.0, value).map_err(|e| Error::WitnessInconsistent(e.to_string()))
    }

    pub fn set_all(&mut self, ws: &[Wire], values: &[u64]) -> Result<()> {
        if ws.len() != values.len() {
            return Err(Error::LengthMismatch { left: ws.len(), right: values.len() });
        }
        ws.iter().zip(values).try_for_each(|(&w, &v)| self.set(w, v))
    }

    pub fn set_digest(&mut self, d: &DigestWires, value: &crate::hash::Digest) -> Result<()> {
        self.set_all(&d.0, &value.0)
    }
}

pub struct Circuit {
    builder: Builder,
    field: FieldSpec,
    meter: GateMeter,
    public: Vec<Wire>,
    free: Vec<Wire>,
    challenged: bool,
}

impl Circuit {
    pub fn new(field: FieldSpec) -> Self {
        Self::with_config(circuit_config(), field)
    }

    pub fn with_config(config: CircuitConfig, field: FieldSpec) -> Self {
        Circuit {
            builder: Builder::new(config),
            field,
            meter: GateMeter::default(),
            public: Vec::new(),
            free: Vec::new(),
            challenged: false,
        }
    }

    pub fn field(&self) -> FieldSpec {
        self.field
    }

    pub fn meter(&self) -> &GateMeter {
        &self.meter
    }

    /// Gate rows opened so far.
    pub fn num_rows(&self) -> usize {
        self.builder.num_gates()
    }

    pub fn public_wires(&self) -> &[Wire] {
        &self.public
    }

    pub fn into_parts(self) -> (Builder, GateMeter) {
        (self.builder, self.meter)
    }

    /// Runs `f` as one instance of gadget class `name`.
    pub fn scope<R>(&mut self, name: &'static str, f: impl FnOnce(&mut Self) -> R) -> R {
        let rows = self.num_rows();
        self.meter.enter(name, rows);
        let out = f(self);
        let rows = self.num_rows();
        self.meter.exit(rows);
        out
    }

    /// Runs `f` and attributes its rows to `stage`.
    pub fn stage<R>(&mut self, stage: Stage, f: impl FnOnce(&mut Self) -> R) -> R {
        let rows = self.num_rows();
        self.meter.begin_stage(stage, rows);
        let out = f(self);
        let rows = self.num_rows();
        self.meter.end_stage(rows);
        out
    }

    /// Charges relations that a gadget emits through raw builder calls.
    pub(crate) fn charge(&mut self, relations: u64) {
        self.meter.charge(relations);
    }

    pub(crate) fn builder(&mut self) -> &mut Builder {
        &mut self.builder
    }

    pub fn public_input(&mut self) -> Wire {
        let t = self.builder.add_virtual_target();
        self.builder.register_public_input(t);
        let w = Wire(t);
        self.public.push(w);
        w
    }

    pub fn public_inputs(&mut self, n: usize) -> Vec<Wire> {
        (0..n).map(|_| self.public_input()).collect()
    }

    pub fn witness(&mut self, role: Role) -> Wire {
        let w = Wire(self.builder.add_virtual_target());
        if role == Role::Free {
            assert!(!self.challenged, "free witness allocated after the challenges were drawn");
            self.free.push(w);
        }
        w
    }

    pub fn witnesses(&mut self, role: Role, n: usize) -> Vec<Wire> {
        (0..n).map(|_| self.witness(role)).collect()
    }

    pub fn constant(&mut self, v: u64) -> Wire {
        Wire(self.builder.constant(F::from_noncanonical_u64(v)))
    }

    pub fn zero(&mut self) -> Wire {
        Wire(self.builder.zero())
    }

    pub fn one(&mut self) -> Wire {
        Wire(self.builder.one())
    }

    pub fn add(&mut self, a: Wire, b: Wire) -> Wire {
        self.charge(1);
        Wire(self.builder.add(a.0, b.0))
    }

    pub fn sub(&mut self, a: Wire, b: Wire) -> Wire {
        self.charge(1);
        Wire(self.builder.sub(a.0, b.0))
    }

    pub fn mul(&mut self, a: Wire, b: Wire) -> Wire {
        self.charge(1);
        Wire(self.builder.mul(a.0, b.0))
    }

    /// `a * b + c`.
    pub fn mul_add(&mut self, a: Wire, b: Wire, c: Wire) -> Wire {
        self.charge(2);
        Wire(self.builder.mul_add(a.0, b.0, c.0))
    }

    pub fn add_const(&mut self, a: Wire, c: u64) -> Wire {
        self.charge(1);
        Wire(self.builder.add_const(a.0, F::from_noncanonical_u64(c)))
    }

    pub fn mul_const(&mut self, c: u64, a: Wire) -> Wire {
        self.charge(1);
        Wire(self.builder.mul_const(F::from_noncanonical_u64(c), a.0))
    }

    /// `c * a + b`.
    pub fn mul_const_add(&mut self, c: u64, a: Wire, b: Wire) -> Wire {
        self.charge(2);
        Wire(self.builder.mul_const_add(F::from_noncanonical_u64(c), a.0, b.0))
    }

    pub fn sum(&mut self, ws: &[Wire]) -> Wire {
        match ws.split_first() {
            None => self.zero(),
            Some((&first, rest)) => rest.iter().fold(first, |acc, &w| self.add(acc, w)),
        }
    }

    /// `(a - b)^2 + acc`.
    pub fn sq_diff_add(&mut self, a: Wire, b: Wire, acc: Wire) -> Wire {
        let d = self.sub(a, b);
        self.mul_add(d, d, acc)
    }

    pub fn assert_eq(&mut self, a: Wire, b: Wire) {
        self.builder.connect(a.0, b.0);
    }

    pub fn assert_zero(&mut self, a: Wire) {
        self.builder.assert_zero(a.0);
    }

    /// Constrains `w` to be boolean.
    pub fn assert_bool(&mut self, w: Wire) -> Bit {
        self.charge(2);
        let b = BoolTarget::new_unsafe(w.0);
        self.builder.assert_bool(b);
        Bit(b)
    }

    pub fn select(&mut self, b: Bit, if_one: Wire, if_zero: Wire) -> Wire {
        self.charge(2);
        Wire(self.builder.select(b.0, if_one.0, if_zero.0))
    }

    pub fn not(&mut self, b: Bit) -> Bit {
        self.charge(1);
        Bit(self.builder.not(b.0))
    }

    pub fn and(&mut self, a: Bit, b: Bit) -> Bit {
        self.charge(1);
        Bit(self.builder.and(a.0, b.0))
    }

    pub fn or(&mut self, a: Bit, b: Bit) -> Bit {
        self.charge(3);
        Bit(self.builder.or(a.0, b.0))
    }

    pub fn is_equal(&mut self, a: Wire, b: Wire) -> Bit {
        self.charge(4);
        Bit(self.builder.is_equal(a.0, b.0))
    }

    /// Little-endian decomposition into `n` bits, which also range-checks `x < 2^n`.
    pub fn split_bits(&mut self, x: Wire, n: usize) -> Vec<Bit> {
        assert!(n <= 63, "decompositions use a single base-2 row");
        if n == 0 {
            self.assert_zero(x);
            return Vec::new();
        }
        self.charge(4 * n as u64 - 2);
        self.builder.split_le(x.0, n).into_iter().map(Bit).collect()
    }

    /// Constrains `x < 2^bits`.
    pub fn range_check(&mut self, x: Wire, bits: usize) {
        self.scope("range_check", |c| {
            c.split_bits(x, bits);
        });
    }

    /// Draws the two challenges from a hash of every public and free wire.
    pub fn challenges(&mut self) -> (Challenge, Challenge) {
        assert!(!self.challenged, "challenges are drawn once");
        self.challenged = true;
        let mut absorbed = self.public.clone();
        absorbed.extend_from_slice(&self.free);
        let digest = self.scope("transcript", |c| c.hash(crate::hash::Domain::Transcript, &absorbed));
        (Challenge(digest.0[0]), Challenge(digest.0[1]))
    }
}

/// Native field value of a `u64`, for witness computations.
pub fn felt(x: u64) -> F {
    F::from_noncanonical_u64(x)
}


#[cfg(test)]
mod tests {
    use super::testing::satisfiable;
    use super::*;

    #[test]
    fn primitives_and_metering() {
        let mut c = Circuit::new(FieldSpec::goldilocks());
        let x = c.witness(Role::Free);
        let y = c.scope("demo", |c| {
            let s = c.add(x, x);
            c.mul_add(s, s, x)
        });
        let want = c.constant(39);
        c.assert_eq(y, want);
        assert_eq!(c.meter().class("demo").relations, 3);
        assert_eq!(c.meter().class("demo").instances, 1);
        let mut a = Assignment::new();
        a.set(x, 3).unwrap();
        assert!(satisfiable(c, a));
    }

    #[test]
    fn range_checks_reject_large_values() {
        for (v, ok) in [(255u64, true), (256, false)] {
            let mut c = Circuit::new(FieldSpec::goldilocks());
            let x = c.witness(Role::Bound);
            c.range_check(x, 8);
            let mut a = Assignment::new();
            a.set(x, v).unwrap();
            assert_eq!(satisfiable(c, a), ok, "{v}");
        }
    }

    #[test]
    #[should_panic(expected = "after the challenges")]
    fn free_wires_precede_challenges() {
        let mut c = Circuit::new(FieldSpec::goldilocks());
        c.witness(Role::Free);
        c.challenges();
        c.witness(Role::Free);
    }
}
