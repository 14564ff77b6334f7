//! Declarative `key = value` run configuration.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use v3db::{FieldSpec, FxScale, IvfPqConfig, Variant};

use crate::error::Failure;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// `n0 = 0` means "size of the dataset".
    pub ivf: IvfPqConfig,
    pub field: FieldSpec,
    pub scale_bits: u32,
    pub signed: bool,
    pub variant: Variant,
    pub seed: u64,
    /// Mixture components of synthetic datasets.
    pub components: usize,
    /// Largest `n_list` explored by `tune`; 0 means the capacity budget.
    pub n_list_max: usize,
    pub codebook_sizes: Vec<usize>,
}

const KEYS: &[&str] = &[
    "n0",
    "dim",
    "n_list",
    "n_probe",
    "capacity",
    "sub_quantizers",
    "codebook_size",
    "top_k",
    "modulus_bits",
    "t_cmp",
    "scale_bits",
    "signed",
    "variant",
    "seed",
    "components",
    "n_list_max",
    "codebook_sizes",
];

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            ivf: IvfPqConfig {
                n0: 0,
                dim: 4,
                n_list: 4,
                n_probe: 2,
                capacity: 4,
                sub_quantizers: 2,
                codebook_size: 2,
                top_k: 2,
            },
            field: FieldSpec::goldilocks(),
            scale_bits: 8,
            signed: false,
            variant: Variant::Multiset,
            seed: 0,
            components: 0,
            n_list_max: 0,
            codebook_sizes: vec![2, 4, 16, 256],
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, Failure> {
    value.parse().map_err(|_| Failure::usage(format!("{key}: cannot parse {value:?}")))
}

pub fn parse_variant(value: &str) -> Result<Variant, Failure> {
    value.parse().map_err(|e: v3db::Error| Failure::usage(e.to_string()))
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        let mut pairs = BTreeMap::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Failure::usage(format!("config line {}: expected key = value", n + 1)))?;
            let key = key.trim();
            if !KEYS.contains(&key) {
                return Err(Failure::usage(format!("config line {}: unknown key {key:?}", n + 1)));
            }
            if pairs.insert(key.to_string(), value.trim().to_string()).is_some() {
                return Err(Failure::usage(format!("config line {}: duplicate key {key:?}", n + 1)));
            }
        }
        let mut cfg = RunConfig::default();
        let (mut modulus_bits, mut t_cmp) = (cfg.field.modulus_bits(), cfg.field.t_cmp());
        for (key, value) in &pairs {
            let v = value.as_str();
            match key.as_str() {
                "n0" => cfg.ivf.n0 = parse_num(key, v)?,
                "dim" => cfg.ivf.dim = parse_num(key, v)?,
                "n_list" => cfg.ivf.n_list = parse_num(key, v)?,
                "n_probe" => cfg.ivf.n_probe = parse_num(key, v)?,
                "capacity" => cfg.ivf.capacity = parse_num(key, v)?,
                "sub_quantizers" => cfg.ivf.sub_quantizers = parse_num(key, v)?,
                "codebook_size" => cfg.ivf.codebook_size = parse_num(key, v)?,
                "top_k" => cfg.ivf.top_k = parse_num(key, v)?,
                "modulus_bits" => modulus_bits = parse_num(key, v)?,
                "t_cmp" => t_cmp = parse_num(key, v)?,
                "scale_bits" => cfg.scale_bits = parse_num(key, v)?,
                "signed" => cfg.signed = parse_num(key, v)?,
                "variant" => cfg.variant = parse_variant(v)?,
                "seed" => cfg.seed = parse_num(key, v)?,
                "components" => cfg.components = parse_num(key, v)?,
                "n_list_max" => cfg.n_list_max = parse_num(key, v)?,
                "codebook_sizes" => {
                    cfg.codebook_sizes = v.split(',').map(|s| parse_num(key, s.trim())).collect::<Result<_, _>>()?
                }
                _ => unreachable!("keys are checked above"),
            }
        }
        cfg.field = FieldSpec::new(modulus_bits, t_cmp).map_err(|e| Failure::usage(e.to_string()))?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = fs::read_to_string(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// The IVF configuration for `n0` vectors, checked.
    pub fn ivf_for(&self, n0: usize) -> Result<IvfPqConfig, Failure> {
        if self.ivf.n0 != 0 && self.ivf.n0 != n0 {
            return Err(Failure::data(format!("config expects n0 = {}, dataset has {n0} vectors", self.ivf.n0)));
        }
        let ivf = IvfPqConfig { n0, ..self.ivf };
        ivf.validate().map_err(Failure::from)?;
        Ok(ivf)
    }

    /// Largest encoded coordinate under this configuration's scale.
    pub fn coord_max(&self) -> Result<u64, Failure> {
        Ok(FxScale::new(self.scale_bits, 1.0, self.signed)?.coord_max())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_key() {
        let cfg = RunConfig::parse(
            "# tiny\nn_list = 8\ncapacity=16\ndim = 8\nsub_quantizers = 4\ncodebook_size = 4\nn_probe = 2\ntop_k = 3\n\
             t_cmp = 40\nscale_bits = 10\nsigned = true\nvariant = baseline\nseed = 9\ncodebook_sizes = 2, 4\n",
        )
        .unwrap();
        assert_eq!((cfg.ivf.n_list, cfg.ivf.capacity, cfg.ivf.top_k), (8, 16, 3));
        assert_eq!(cfg.field.t_cmp(), 40);
        assert_eq!((cfg.variant, cfg.seed, cfg.signed), (Variant::Baseline, 9, true));
        assert_eq!(cfg.codebook_sizes, vec![2, 4]);
        assert_eq!(cfg.coord_max().unwrap(), 2 * 1023);
        assert!(RunConfig::parse("scale_bits = 40").unwrap().coord_max().is_err());
    }

    #[test]
    fn rejects_unknown_duplicate_and_bad_values() {
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("dim = 4\ndim = 8").is_err());
        assert!(RunConfig::parse("dim = four").is_err());
        assert!(RunConfig::parse("dim").is_err());
        assert!(RunConfig::parse("variant = fast").is_err());
    }

    #[test]
    fn n0_must_match_the_dataset() {
        let cfg = RunConfig::parse("n0 = 10").unwrap();
        assert!(cfg.ivf_for(11).is_err());
        assert_eq!(cfg.ivf_for(10).unwrap().n0, 10);
        assert!(RunConfig::default().ivf_for(17).is_err());
    }
}
