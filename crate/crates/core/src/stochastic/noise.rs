use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;

use super::StochasticError;
use crate::kernel::KernelTable;

/// Relative size below which negative covariance eigenvalues count as rounding.
pub const CLIP_TOLERANCE: f64 = 1e-10;

/// Gaussian field `ΔB` with `E[ΔB_i ΔB_j] = -ħ U(x_i - x_j) dt`.
#[derive(Debug, Clone)]
pub enum NoiseModel {
    /// Factor `F` (n × r) with `F Fᵀ = -ħ U`, from the truncated eigendecomposition.
    Field {
        factor: DMatrix<f64>,
        clipped: usize,
        lambda_max: f64,
    },
    /// A single Wiener increment shared by all points, for the quadratic-core model.
    Scalar,
}

impl NoiseModel {
    /// Decomposes `-ħ U` on the kernel's grid.
    ///
    /// Negative eigenvalues larger than `CLIP_TOLERANCE · λ_max` in magnitude
    /// mean the kernel is not a valid covariance and are reported as an error.
    pub fn from_kernel(kernel: &KernelTable) -> Result<Self, StochasticError> {
        let cov = kernel.dense_matrix() * (-kernel.hbar());
        let eig = SymmetricEigen::new(cov);
        let lambda_max = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let lambda_min = eig
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        if lambda_max <= 0.0 || lambda_min < -CLIP_TOLERANCE * lambda_max {
            return Err(StochasticError::NotPositiveSemidefinite {
                lambda_min,
                lambda_max,
            });
        }
        let cut = CLIP_TOLERANCE * lambda_max;
        let keep: Vec<usize> = (0..eig.eigenvalues.len())
            .filter(|&i| eig.eigenvalues[i] > cut)
            .collect();
        let clipped = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
        if clipped > 0 {
            log::debug!(
                "clipped {clipped} negative covariance eigenvalues (λ_min = {lambda_min:.3e})"
            );
        }
        let n = kernel.grid().n();
        let mut factor = DMatrix::zeros(n, keep.len());
        for (c, &i) in keep.iter().enumerate() {
            let s = eig.eigenvalues[i].sqrt();
            for r in 0..n {
                factor[(r, c)] = eig.eigenvectors[(r, i)] * s;
            }
        }
        Ok(Self::Field {
            factor,
            clipped,
            lambda_max,
        })
    }

    pub fn rank(&self) -> usize {
        match self {
            Self::Field { factor, .. } => factor.ncols(),
            Self::Scalar => 1,
        }
    }

    /// Draws `ΔB` for a step `dt` into `out`. For [`NoiseModel::Scalar`] only
    /// `out[0]` is written, with variance `dt`.
    pub fn sample<R: Rng>(&self, rng: &mut R, dt: f64, out: &mut [f64], z: &mut Vec<f64>) {
        z.clear();
        z.extend((0..self.rank()).map(|_| rng.sample::<f64, _>(StandardNormal)));
        self.increment_from_normals(z, dt, out);
    }

    /// `ΔB = F z sqrt(dt)` for given standard normals `z` (length [`rank`](Self::rank)).
    /// Summing the `z` of consecutive steps (scaled by `1/sqrt(k)`) yields the
    /// increment of the coarser step, which couples runs at different `dt`.
    pub fn increment_from_normals(&self, z: &[f64], dt: f64, out: &mut [f64]) {
        let sd = dt.abs().sqrt();
        match self {
            Self::Field { factor, .. } => {
                for (r, o) in out.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for (c, zc) in z.iter().enumerate() {
                        acc += factor[(r, c)] * zc;
                    }
                    *o = acc * sd;
                }
            }
            Self::Scalar => {
                out[0] = z[0] * sd;
            }
        }
    }
}

/// Independent, reproducible stream for trajectory `k` of a run seeded with `seed`.
pub fn trajectory_rng(seed: u64, k: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(k);
    rng
}

/// One draw of `ΔB` from a fresh stream, mainly for inspection.
pub fn sample_noise(model: &NoiseModel, seed: u64, k: u64, dt: f64, n: usize) -> Vec<f64> {
    let mut rng = trajectory_rng(seed, k);
    let mut out = vec![0.0; n];
    let mut z = Vec::new();
    model.sample(&mut rng, dt, &mut out, &mut z);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use crate::kernel::{build_grid_kernel, BallSpec, KernelModel};
    use crate::units::PhysicalConstants;

    #[test]
    fn factor_reproduces_covariance() {
        let grid = make_grid(32, 8.0, 2).unwrap();
        let b = BallSpec::new(1.0, 1.0, PhysicalConstants::unit()).unwrap();
        let k = build_grid_kernel(&b, &grid, KernelModel::Ball).unwrap();
        let NoiseModel::Field { factor, .. } = NoiseModel::from_kernel(&k).unwrap() else {
            panic!("expected field noise");
        };
        let cov = &factor * factor.transpose();
        let target = k.dense_matrix() * -1.0;
        assert!((cov - &target).abs().max() < 1e-9 * target.abs().max());
    }

    #[test]
    fn quadratic_kernel_is_not_a_covariance() {
        let grid = make_grid(32, 16.0, 2).unwrap();
        let b = BallSpec::new(1.0, 1.0, PhysicalConstants::unit()).unwrap();
        let k = build_grid_kernel(&b, &grid, KernelModel::Quadratic).unwrap();
        assert!(matches!(
            NoiseModel::from_kernel(&k),
            Err(StochasticError::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a = sample_noise(&NoiseModel::Scalar, 7, 3, 1.0, 1);
        let b = sample_noise(&NoiseModel::Scalar, 7, 3, 1.0, 1);
        let c = sample_noise(&NoiseModel::Scalar, 7, 4, 1.0, 1);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_covariance() {
        let grid = make_grid(16, 8.0, 2).unwrap();
        let b = BallSpec::new(1.0, 1.0, PhysicalConstants::unit()).unwrap();
        let k = build_grid_kernel(&b, &grid, KernelModel::Ball).unwrap();
        let model = NoiseModel::from_kernel(&k).unwrap();
        let mut rng = trajectory_rng(1, 0);
        let (mut s00, mut s05) = (0.0, 0.0);
        let (mut out, mut z) = (vec![0.0; 16], Vec::new());
        let n = 20_000;
        for _ in 0..n {
            model.sample(&mut rng, 0.01, &mut out, &mut z);
            s00 += out[0] * out[0];
            s05 += out[0] * out[5];
        }
        let c00 = -k.value_between(0, 0) * 0.01;
        let c05 = -k.value_between(0, 5) * 0.01;
        assert!((s00 / n as f64 - c00).abs() < 0.05 * c00);
        assert!((s05 / n as f64 - c05).abs() < 0.05 * c00);
    }
}
