//! IVF-PQ shape parameters and the public circuit parameters derived from them.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fixedpoint::{FieldSpec, FxScale};

/// Fixed-shape IVF-PQ configuration.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct IvfPqConfig {
    /// Number of real vectors.
    pub n0: usize,
    /// Vector dimension `D`.
    pub dim: usize,
    /// Number of inverted lists.
    pub n_list: usize,
    /// Lists probed per query.
    pub n_probe: usize,
    /// Slots per list `n`.
    pub capacity: usize,
    /// Sub-quantizers `M`.
    pub sub_quantizers: usize,
    /// Codewords per sub-quantizer `K`.
    pub codebook_size: usize,
    /// Results per query `k`.
    pub top_k: usize,
}

impl IvfPqConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.dim == 0 || self.sub_quantizers == 0 {
            return bad("dimension and sub-quantizer count must be positive".into());
        }
        if !self.dim.is_multiple_of(self.sub_quantizers) {
            return bad(format!("D = {} is not a multiple of M = {}", self.dim, self.sub_quantizers));
        }
        for (what, value) in
            [("n_list", self.n_list), ("capacity", self.capacity), ("codebook_size", self.codebook_size)]
        {
            if !value.is_power_of_two() {
                return Err(Error::NotPowerOfTwo { what, value });
            }
        }
        if self.n_probe == 0 || self.n_probe > self.n_list {
            return bad(format!("n_probe = {} must lie in [1, {}]", self.n_probe, self.n_list));
        }
        if self.top_k == 0 || self.top_k > self.n_sel() {
            return bad(format!("k = {} must lie in [1, {}]", self.top_k, self.n_sel()));
        }
        if self.n0 > self.total_slots() {
            return Err(Error::InfeasibleCapacity { n0: self.n0, n_list: self.n_list, capacity: self.capacity });
        }
        Ok(())
    }

    /// Sub-block dimension `d = D / M`.
    pub fn sub_dim(&self) -> usize {
        self.dim / self.sub_quantizers
    }

    /// Padded capacity `N = n_list * n`.
    pub fn total_slots(&self) -> usize {
        self.n_list * self.capacity
    }

    /// Scan budget `N_sel = n_probe * n`.
    pub fn n_sel(&self) -> usize {
        self.n_probe * self.capacity
    }

    /// Code budget `B = M * log2 K` in bits per vector.
    pub fn code_bits(&self) -> usize {
        self.sub_quantizers * self.codebook_size.trailing_zeros() as usize
    }

    pub fn list_depth(&self) -> usize {
        self.n_list.trailing_zeros() as usize
    }
}

/// Circuit design used to prove a query.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variant {
    /// Sorting networks and indicator lookups evaluated in-circuit.
    Baseline,
    /// Randomized multiset equality and inclusion checks.
    Multiset,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::Baseline, Variant::Multiset];

    pub fn tag(self) -> u8 {
        match self {
            Variant::Baseline => 0,
            Variant::Multiset => 1,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        match tag {
            0 => Some(Variant::Baseline),
            1 => Some(Variant::Multiset),
            _ => None,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Baseline => "baseline",
            Variant::Multiset => "multiset",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(Variant::Baseline),
            "multiset" => Ok(Variant::Multiset),
            _ => Err(Error::InvalidConfig(format!("unknown variant {s:?}"))),
        }
    }
}

/// Everything a verifier must know to rebuild the query circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct CircuitShape {
    pub config: IvfPqConfig,
    pub field: FieldSpec,
    /// Largest encoded coordinate; residuals are shifted by this amount.
    pub coord_max: u64,
}

impl CircuitShape {
    pub fn new(config: IvfPqConfig, field: FieldSpec, coord_max: u64) -> Result<Self> {
        let shape = CircuitShape { config, field, coord_max };
        shape.validate()?;
        Ok(shape)
    }

    pub fn from_scale(config: IvfPqConfig, field: FieldSpec, scale: &FxScale) -> Result<Self> {
        Self::new(config, field, scale.coord_max())
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        self.field.check_distance_bound(self.config.dim, self.coord_max)?;
        let bound = self.max_candidate_distance();
        if bound >= self.field.d_max() as u128 {
            return Err(Error::DmaxTooSmall { bound, d_max: self.field.d_max() });
        }
        let key_bound =
            (self.config.n_probe * self.config.sub_quantizers + 1) as u128 * self.config.codebook_size as u128;
        if key_bound >= self.field.cmp_bound() as u128 {
            return Err(Error::InvalidConfig("lookup keys overflow the comparison range".into()));
        }
        Ok(())
    }

    /// The same shape with the vector count cleared; circuits do not depend on it.
    pub fn canonical(&self) -> Self {
        CircuitShape { config: IvfPqConfig { n0: 0, ..self.config }, ..*self }
    }

    /// Residual shift `R`: residual coordinates `q - mu + R` lie in `[0, 2R]`.
    pub fn residual_offset(&self) -> u64 {
        self.coord_max
    }

    /// Upper bound on a valid candidate's ADC distance, `D * (2R)^2`.
    pub fn max_candidate_distance(&self) -> u128 {
        self.config.dim as u128 * (2 * self.coord_max as u128).pow(2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tiny() -> IvfPqConfig {
        IvfPqConfig {
            n0: 12,
            dim: 4,
            n_list: 4,
            n_probe: 2,
            capacity: 4,
            sub_quantizers: 2,
            codebook_size: 2,
            top_k: 2,
        }
    }

    #[test]
    fn derived_quantities() {
        let c = tiny();
        c.validate().unwrap();
        assert_eq!(c.sub_dim(), 2);
        assert_eq!(c.total_slots(), 16);
        assert_eq!(c.n_sel(), 8);
        assert_eq!(c.code_bits(), 2);
        assert_eq!(c.list_depth(), 2);
    }

    #[test]
    fn rejects_bad_shapes() {
        let bad = [
            IvfPqConfig { dim: 5, ..tiny() },
            IvfPqConfig { n_list: 3, ..tiny() },
            IvfPqConfig { capacity: 6, ..tiny() },
            IvfPqConfig { codebook_size: 3, ..tiny() },
            IvfPqConfig { n_probe: 5, ..tiny() },
            IvfPqConfig { n_probe: 0, ..tiny() },
            IvfPqConfig { top_k: 9, ..tiny() },
            IvfPqConfig { n0: 17, ..tiny() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }

    #[test]
    fn shape_checks_dmax() {
        let f = FieldSpec::new(64, 20).unwrap();
        // 4 * (2 * 300)^2 = 1.44e6 exceeds 2^19 - 1.
        assert!(matches!(CircuitShape::new(tiny(), f, 300), Err(Error::DmaxTooSmall { .. })));
        CircuitShape::new(tiny(), f, 100).unwrap();
    }

    #[test]
    fn variant_round_trip() {
        for v in Variant::ALL {
            assert_eq!(v.to_string().parse::<Variant>().unwrap(), v);
            assert_eq!(Variant::from_tag(v.tag()), Some(v));
        }
        assert!("fast".parse::<Variant>().is_err());
    }
}
