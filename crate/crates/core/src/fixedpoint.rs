//! Fixed-point encoding of real vectors into range-bounded field integers.
//!
//! Every value that reaches a circuit comparison must lie in `[0, 2^(t_cmp-1))`.
//! Coordinates are scaled to `bits`-bit integers; when the data has negative
//! coordinates the encoding is shifted by one full scale so that every encoded
//! value stays nonnegative. Squared distances are shift invariant, so the shift
//! never changes query results.

use crate::error::{Error, Result};

/// Bit length of the Goldilocks prime `2^64 - 2^32 + 1`.
pub const GOLDILOCKS_BITS: u32 = 64;

/// Shape of the proof field as seen by the range-bounded comparison gadget.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FieldSpec {
    modulus_bits: u32,
    t_cmp: u32,
}

impl FieldSpec {
    pub fn new(modulus_bits: u32, t_cmp: u32) -> Result<Self> {
        if t_cmp < 2 || t_cmp > modulus_bits - 1 {
            return Err(Error::InvalidConfig(format!("t_cmp = {t_cmp} must lie in [2, {}]", modulus_bits - 1)));
        }
        // Comparison bits are decomposed into a single 63-limb base-2 gate row.
        if t_cmp > 63 {
            return Err(Error::InvalidConfig(format!("t_cmp = {t_cmp} exceeds 63")));
        }
        Ok(FieldSpec { modulus_bits, t_cmp })
    }

    /// 64-bit Goldilocks field with `t_cmp = 48`.
    pub fn goldilocks() -> Self {
        FieldSpec { modulus_bits: GOLDILOCKS_BITS, t_cmp: 48 }
    }

    pub fn modulus_bits(&self) -> u32 {
        self.modulus_bits
    }

    pub fn t_cmp(&self) -> u32 {
        self.t_cmp
    }

    /// Exclusive upper bound `2^(t_cmp-1)` for compared values.
    pub fn cmp_bound(&self) -> u64 {
        1u64 << (self.t_cmp - 1)
    }

    /// Public distance assigned to padding slots, `2^(t_cmp-1) - 1`.
    pub fn d_max(&self) -> u64 {
        self.cmp_bound() - 1
    }

    /// Checks that `dim * coord_max^2` stays below the comparison bound.
    pub fn check_distance_bound(&self, dim: usize, coord_max: u64) -> Result<()> {
        let bound = dim as u128 * (coord_max as u128).pow(2);
        if bound >= self.cmp_bound() as u128 {
            return Err(Error::RangeOverflow { bound, bits: self.t_cmp - 1 });
        }
        Ok(())
    }
}

impl Default for FieldSpec {
    fn default() -> Self {
        Self::goldilocks()
    }
}

/// Fixed-point scale shared by every vector of a snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FxScale {
    bits: u32,
    v_max: f64,
    signed: bool,
}

impl FxScale {
    pub fn new(bits: u32, v_max: f64, signed: bool) -> Result<Self> {
        if !(1..=30).contains(&bits) {
            return Err(Error::InvalidConfig(format!("scale bits = {bits} must lie in [1, 30]")));
        }
        if !(v_max.is_finite() && v_max > 0.0) {
            return Err(Error::InvalidConfig(format!("v_max = {v_max} must be positive")));
        }
        Ok(FxScale { bits, v_max, signed })
    }

    /// Scale covering every coordinate of `vectors`; signed iff any coordinate is negative.
    pub fn fit<'a>(vectors: impl IntoIterator<Item = &'a [f32]>, bits: u32) -> Result<Self> {
        let mut v_max = 0f64;
        let mut signed = false;
        for v in vectors {
            for &x in v {
                v_max = v_max.max((x as f64).abs());
                signed |= x < 0.0;
            }
        }
        if v_max == 0.0 {
            v_max = 1.0;
        }
        Self::new(bits, v_max, signed)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn v_max(&self) -> f64 {
        self.v_max
    }

    pub fn signed(&self) -> bool {
        self.signed
    }

    /// Number of quantization steps per `v_max`, `2^bits - 1`.
    pub fn levels(&self) -> u64 {
        (1u64 << self.bits) - 1
    }

    /// Shift added to every encoded coordinate.
    pub fn offset(&self) -> u64 {
        if self.signed {
            self.levels()
        } else {
            0
        }
    }

    /// Largest encoded coordinate.
    pub fn coord_max(&self) -> u64 {
        self.levels() + self.offset()
    }

    pub fn encode(&self, v: f64) -> Result<u64> {
        let in_range = if self.signed { v.abs() <= self.v_max } else { (0.0..=self.v_max).contains(&v) };
        if !in_range {
            return Err(Error::CoordinateOutOfRange { value: v, v_max: self.v_max });
        }
        // f64::round rounds half away from zero.
        let level = (self.levels() as f64 * v / self.v_max).round() as i64;
        Ok((level + self.offset() as i64) as u64)
    }

    pub fn decode(&self, x: u64) -> f64 {
        (x as f64 - self.offset() as f64) * self.v_max / self.levels() as f64
    }
}

/// A vector of encoded fixed-point coordinates.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FxVector {
    coords: Vec<u64>,
}

impl FxVector {
    pub fn from_coords(coords: Vec<u64>) -> Self {
        FxVector { coords }
    }

    pub fn zeros(dim: usize) -> Self {
        FxVector { coords: vec![0; dim] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[u64] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [u64] {
        &mut self.coords
    }

    pub fn into_coords(self) -> Vec<u64> {
        self.coords
    }

    pub fn max_coord(&self) -> u64 {
        self.coords.iter().copied().max().unwrap_or(0)
    }
}

impl AsRef<[u64]> for FxVector {
    fn as_ref(&self) -> &[u64] {
        &self.coords
    }
}

impl From<Vec<u64>> for FxVector {
    fn from(coords: Vec<u64>) -> Self {
        FxVector { coords }
    }
}

pub fn encode_vector(v: &[f64], scale: &FxScale) -> Result<FxVector> {
    v.iter().map(|&x| scale.encode(x)).collect::<Result<Vec<_>>>().map(FxVector::from_coords)
}

pub fn encode_f32(v: &[f32], scale: &FxScale) -> Result<FxVector> {
    v.iter().map(|&x| scale.encode(x as f64)).collect::<Result<Vec<_>>>().map(FxVector::from_coords)
}

/// Encodes a query, clamping every coordinate into the representable range first.
pub fn encode_clamped(v: &[f32], scale: &FxScale) -> Result<FxVector> {
    let v_max = scale.v_max();
    let lo = if scale.signed() { -v_max } else { 0.0 };
    v.iter().map(|&x| scale.encode((x as f64).clamp(lo, v_max))).collect::<Result<Vec<_>>>().map(FxVector::from_coords)
}

pub fn decode_vector(x: &FxVector, scale: &FxScale) -> Vec<f64> {
    x.coords.iter().map(|&c| scale.decode(c)).collect()
}

/// Squared Euclidean distance between two encoded vectors.
///
/// Fails with [`Error::RangeOverflow`] if `D * max_coord^2` could leave the
/// comparison range, where `max_coord` is the largest coordinate of either input.
pub fn dist_sq(x: &FxVector, y: &FxVector, field: &FieldSpec) -> Result<u64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch { expected: x.dim(), got: y.dim() });
    }
    field.check_distance_bound(x.dim(), x.max_coord().max(y.max_coord()))?;
    Ok(sq_dist(&x.coords, &y.coords))
}

/// Unchecked squared distance; callers guarantee the no-overflow bound.
#[inline]
pub(crate) fn sq_dist(x: &[u64], y: &[u64]) -> u64 {
    x.iter()
        .zip(y)
        .map(|(&a, &b)| {
            let d = a.abs_diff(b);
            d * d
        })
        .sum()
}
