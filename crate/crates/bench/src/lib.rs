//! Shapes shared by the benchmarks.

use v3db::IvfPqConfig;

/// Smallest provable shape.
pub fn tiny() -> IvfPqConfig {
    IvfPqConfig { n0: 12, dim: 4, n_list: 4, n_probe: 2, capacity: 4, sub_quantizers: 2, codebook_size: 2, top_k: 2 }
}

/// A moderate index for the plain pipeline: 64 lists of 64 slots, 16-dimensional.
pub fn medium() -> IvfPqConfig {
    IvfPqConfig {
        n0: 3000,
        dim: 16,
        n_list: 64,
        n_probe: 4,
        capacity: 64,
        sub_quantizers: 4,
        codebook_size: 16,
        top_k: 10,
    }
}
