//! Raw vector input: `fvecs`/`ivecs` files and a seeded Gaussian-mixture generator.
//!
//! Both file formats store each vector as a little-endian `i32` dimension followed
//! by that many 4-byte little-endian values (`f32` for fvecs, `i32` for ivecs).

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

fn read_vecs<T, R: Read>(mut r: R, what: &'static str, decode: impl Fn([u8; 4]) -> T) -> Result<Vec<Vec<T>>> {
    let mut out: Vec<Vec<T>> = Vec::new();
    let mut head = [0u8; 4];
    loop {
        match r.read_exact(&mut head) {
            Ok(()) => {}
            Err(e) if e.kind() == ErrorKind::UnexpectedEof => break,
            Err(e) => return Err(e.into()),
        }
        let dim = i32::from_le_bytes(head);
        if dim <= 0 {
            return Err(Error::malformed(what, format!("vector {} has dimension {dim}", out.len())));
        }
        let dim = dim as usize;
        if let Some(first) = out.first() {
            if first.len() != dim {
                return Err(Error::DimensionMismatch { expected: first.len(), got: dim });
            }
        }
        let mut body = vec![0u8; dim * 4];
        r.read_exact(&mut body).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => Error::malformed(what, format!("vector {} is truncated", out.len())),
            _ => e.into(),
        })?;
        out.push(body.chunks_exact(4).map(|c| decode(c.try_into().expect("4 bytes"))).collect());
    }
    Ok(out)
}

fn write_vecs<T: Copy, W: Write>(mut w: W, vectors: &[Vec<T>], encode: impl Fn(T) -> [u8; 4]) -> Result<()> {
    for v in vectors {
        w.write_all(&(v.len() as i32).to_le_bytes())?;
        for &x in v {
            w.write_all(&encode(x))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads an fvecs stream; every vector must have the same dimension.
pub fn read_fvecs<R: Read>(r: R) -> Result<Vec<Vec<f32>>> {
    let vs = read_vecs(r, "fvecs", f32::from_le_bytes)?;
    if vs.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::malformed("fvecs", "non-finite coordinate"));
    }
    Ok(vs)
}

pub fn read_ivecs<R: Read>(r: R) -> Result<Vec<Vec<i32>>> {
    read_vecs(r, "ivecs", i32::from_le_bytes)
}

pub fn load_fvecs(path: impl AsRef<Path>) -> Result<Vec<Vec<f32>>> {
    read_fvecs(BufReader::new(File::open(path)?))
}

pub fn load_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    read_ivecs(BufReader::new(File::open(path)?))
}

pub fn save_fvecs(path: impl AsRef<Path>, vectors: &[Vec<f32>]) -> Result<()> {
    write_vecs(BufWriter::new(File::create(path)?), vectors, f32::to_le_bytes)
}

pub fn save_ivecs(path: impl AsRef<Path>, vectors: &[Vec<i32>]) -> Result<()> {
    write_vecs(BufWriter::new(File::create(path)?), vectors, i32::to_le_bytes)
}

/// Seeded mixture of isotropic Gaussians.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureSpec {
    pub count: usize,
    pub dim: usize,
    pub components: usize,
    /// Component means are uniform in `[-spread, spread]^dim`.
    pub spread: f32,
    /// Standard deviation around each mean.
    pub sigma: f32,
    pub seed: u64,
}

impl MixtureSpec {
    pub fn new(count: usize, dim: usize, components: usize, seed: u64) -> Self {
        MixtureSpec { count, dim, components, spread: 1.0, sigma: 0.1, seed }
    }

    /// Draws `count` vectors; each picks a component uniformly.
    pub fn sample(&self) -> Result<Vec<Vec<f32>>> {
        if self.dim == 0 || self.components == 0 {
            return Err(Error::InvalidConfig("mixture needs a positive dimension and component count".into()));
        }
        let noise = Normal::new(0.0f32, self.sigma).map_err(|e| Error::InvalidConfig(format!("mixture sigma: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let means: Vec<Vec<f32>> = (0..self.components)
            .map(|_| (0..self.dim).map(|_| rng.gen_range(-self.spread..=self.spread)).collect())
            .collect();
        Ok((0..self.count)
            .map(|_| {
                let mean = &means[rng.gen_range(0..self.components)];
                mean.iter().map(|&m| m + noise.sample(&mut rng)).collect()
            })
            .collect())
    }
}

/// Indices of the `k` nearest vectors of `base` to `q` by squared Euclidean distance, ties to the lower index.
pub fn exact_knn(base: &[Vec<f32>], q: &[f32], k: usize) -> Vec<usize> {
    let mut scored: Vec<(f32, usize)> =
        base.iter().enumerate().map(|(i, v)| (v.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum(), i)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, i)| i).collect()
}
