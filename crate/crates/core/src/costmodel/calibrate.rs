//! Fitting the term constants to measured circuits, and the proving-time fit.

use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};

use super::{Constants, CostShape, GateEstimate, NUM_TERMS};
use crate::config::{CircuitShape, IvfPqConfig, Variant};
use crate::error::{Error, Result};
use crate::fixedpoint::FieldSpec;
use crate::fixtures::fixture_scale;
use crate::proving::circuit_stats;

/// Lawson-Hanson nonnegative least squares: `argmin |Ax - b|` subject to `x >= 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let tol = 1e-10 * a.norm().max(1.0) * b.norm().max(1.0);
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    for _ in 0..3 * n.max(1) {
        let w = a.transpose() * (b - a * &x);
        let Some(j) = (0..n).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j])) else {
            break;
        };
        passive[j] = true;
        loop {
            let cols: Vec<usize> = (0..n).filter(|&i| passive[i]).collect();
            let sub = a.select_columns(&cols);
            let z = sub.svd(true, true).solve(b, 1e-12).expect("SVD with both factors");
            let mut s = DVector::zeros(n);
            for (k, &i) in cols.iter().enumerate() {
                s[i] = z[k];
            }
            if cols.iter().all(|&i| s[i] > 0.0) {
                x = s;
                break;
            }
            let alpha =
                cols.iter().filter(|&&i| s[i] <= 0.0).map(|&i| x[i] / (x[i] - s[i])).fold(f64::INFINITY, f64::min);
            x += (s - &x) * alpha;
            for &i in &cols {
                if x[i] <= tol {
                    x[i] = 0.0;
                    passive[i] = false;
                }
            }
        }
    }
    x
}

/// Constants fitted against measured gate counts of one variant.
#[derive(Clone, Debug, PartialEq)]
pub struct Calibration {
    pub variant: Variant,
    pub constants: Constants,
    /// `(config, measured G)` pairs the constants were fitted to.
    pub samples: Vec<(IvfPqConfig, usize)>,
}

impl Calibration {
    pub fn estimate(&self, config: &IvfPqConfig, t_cmp: u32) -> GateEstimate {
        GateEstimate::evaluate(&CostShape::from_config(config, t_cmp), self.variant, &self.constants)
    }

    /// Calibration of `variant` on [`default_calibration_set`], computed once per process.
    pub fn default_for(variant: Variant) -> &'static Calibration {
        static CELLS: [OnceLock<Calibration>; 2] = [OnceLock::new(), OnceLock::new()];
        let cell = &CELLS[(variant == Variant::Multiset) as usize];
        cell.get_or_init(|| calibrate(variant, &default_calibration_set()).expect("default calibration set is valid"))
    }
}

fn measure(config: &IvfPqConfig, variant: Variant) -> Result<usize> {
    let shape = CircuitShape::new(*config, FieldSpec::goldilocks(), fixture_scale().coord_max())?;
    Ok(circuit_stats(&shape, variant)?.gates)
}

/// Measures every config and fits one nonnegative constant per term, minimizing relative error.
pub fn calibrate(variant: Variant, configs: &[IvfPqConfig]) -> Result<Calibration> {
    if configs.len() < 6 {
        return Err(Error::InvalidConfig(format!("calibration needs at least 6 circuits, got {}", configs.len())));
    }
    let t_cmp = FieldSpec::goldilocks().t_cmp();
    let samples = configs.iter().map(|c| Ok((*c, measure(c, variant)?))).collect::<Result<Vec<_>>>()?;
    let mut a = DMatrix::zeros(samples.len(), NUM_TERMS);
    let b = DVector::from_element(samples.len(), 1.0);
    for (row, (c, g)) in samples.iter().enumerate() {
        let mono = CostShape::from_config(c, t_cmp).monomials(variant);
        for (col, m) in mono.iter().enumerate() {
            a[(row, col)] = m / *g as f64;
        }
    }
    // Column scaling keeps the active-set iteration well conditioned.
    let scale: Vec<f64> = (0..NUM_TERMS).map(|j| a.column(j).norm().max(f64::MIN_POSITIVE)).collect();
    for (j, s) in scale.iter().enumerate() {
        a.column_mut(j).unscale_mut(*s);
    }
    let x = nnls(&a, &b);
    let mut constants = [0.0; NUM_TERMS];
    for (j, c) in constants.iter_mut().enumerate() {
        *c = x[j] / scale[j];
    }
    Ok(Calibration { variant, constants: Constants(constants), samples })
}

fn config(dim: usize, n_list: usize, n_probe: usize, capacity: usize, m: usize, k: usize, top_k: usize) -> IvfPqConfig {
    IvfPqConfig {
        n0: n_list * capacity / 2,
        dim,
        n_list,
        n_probe,
        capacity,
        sub_quantizers: m,
        codebook_size: k,
        top_k,
    }
}

/// Shapes spread over every monomial, small enough to construct in seconds.
pub fn default_calibration_set() -> Vec<IvfPqConfig> {
    vec![
        config(8, 16, 2, 16, 4, 4, 4),
        config(16, 32, 4, 16, 4, 16, 8),
        config(32, 64, 4, 32, 8, 16, 16),
        config(16, 8, 1, 64, 8, 2, 2),
        config(32, 16, 2, 32, 2, 256, 4),
        config(8, 128, 8, 8, 2, 8, 8),
        config(64, 32, 2, 64, 16, 4, 16),
        config(24, 64, 2, 16, 6, 8, 4),
        config(16, 256, 2, 16, 4, 16, 8),
        config(32, 8, 1, 256, 8, 1, 1),
        config(16, 64, 8, 16, 8, 4, 32),
        config(48, 16, 4, 32, 4, 64, 8),
        config(16, 16, 1, 256, 2, 16, 8),
        config(8, 32, 4, 32, 1, 4, 4),
        config(4, 4, 2, 4, 2, 2, 2),
        config(32, 64, 2, 64, 2, 4, 8),
        config(16, 128, 16, 16, 2, 16, 8),
        config(8, 16, 4, 64, 1, 2, 4),
    ]
}

/// `T = alpha * G_B * log2 G_B + beta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProvingTimeFit {
    pub alpha: f64,
    pub beta: f64,
}

impl ProvingTimeFit {
    pub fn predict(&self, bin: usize) -> f64 {
        self.alpha * bin as f64 * (bin as f64).log2() + self.beta
    }
}

/// Ordinary least squares over `(G_B, seconds)` samples with at least two distinct bins.
pub fn fit_proving_time(samples: &[(usize, f64)]) -> Result<ProvingTimeFit> {
    let xs: Vec<f64> = samples.iter().map(|&(b, _)| b as f64 * (b as f64).log2()).collect();
    let n = samples.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / n;
    let mean_y = samples.iter().map(|&(_, t)| t).sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x).powi(2)).sum();
    if samples.len() < 2 || sxx == 0.0 {
        return Err(Error::InvalidConfig("proving-time fit needs two distinct bins".into()));
    }
    let sxy: f64 = xs.iter().zip(samples).map(|(x, &(_, t))| (x - mean_x) * (t - mean_y)).sum();
    let alpha = sxy / sxx;
    Ok(ProvingTimeFit { alpha, beta: mean_y - alpha * mean_x })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nnls_recovers_a_nonnegative_solution() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, 1.0]);
        let truth = DVector::from_vec(vec![2.0, 3.0]);
        let x = nnls(&a, &(&a * &truth));
        assert!((x - truth).norm() < 1e-9);
    }

    #[test]
    fn nnls_clamps_negative_directions() {
        // Unconstrained optimum is (1, -1); the constrained one puts weight only on column 0.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_vec(vec![1.0, -1.0, 0.0]);
        let x = nnls(&a, &b);
        assert!(x.iter().all(|&v| v >= 0.0));
        assert!((x[0] - 0.5).abs() < 1e-9 && x[1] == 0.0);
    }

    #[test]
    fn proving_time_fit_is_exact_on_a_line() {
        let fit = ProvingTimeFit { alpha: 2e-6, beta: 0.1 };
        let samples: Vec<(usize, f64)> = [1 << 10, 1 << 12, 1 << 14].iter().map(|&b| (b, fit.predict(b))).collect();
        let got = fit_proving_time(&samples).unwrap();
        assert!((got.alpha - fit.alpha).abs() < 1e-12 && (got.beta - fit.beta).abs() < 1e-9);
        assert!(fit_proving_time(&samples[..1]).is_err());
    }
}
