use num_complex::Complex64;
use serde::Serialize;

use super::{Convolver, DensityMatrix, Spectral, WaveFunction};
use crate::kernel::KernelTable;

/// Position and momentum moments plus the self-energy `U_G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_p: f64,
    pub var_p: f64,
    /// `∫∫ U(x'' - x') ρ(x', x') ρ(x'', x'') dx' dx''`.
    pub u_g: f64,
    pub norm_sq: f64,
}

fn position_moments(x: &[f64], weights: &[f64]) -> (f64, f64, f64) {
    let total: f64 = weights.iter().sum();
    let mean = x.iter().zip(weights).map(|(x, w)| x * w).sum::<f64>() / total;
    let var = x
        .iter()
        .zip(weights)
        .map(|(x, w)| (x - mean).powi(2) * w)
        .sum::<f64>()
        / total;
    (total, mean, var)
}

fn momentum_moments(k: &[f64], weights: &[f64], hbar: f64) -> (f64, f64) {
    let total: f64 = weights.iter().sum();
    let mean = k.iter().zip(weights).map(|(k, w)| k * w).sum::<f64>() / total;
    let var = k
        .iter()
        .zip(weights)
        .map(|(k, w)| (k - mean).powi(2) * w)
        .sum::<f64>()
        / total;
    (hbar * mean, hbar * hbar * var)
}

pub fn compute_moments(psi: &WaveFunction, kernel: &KernelTable) -> Moments {
    let grid = psi.grid();
    let h = grid.spacing();
    let density = psi.density();
    let weights: Vec<f64> = density.iter().map(|d| d * h).collect();
    let (norm_sq, mean_x, var_x) = position_moments(&grid.positions(), &weights);

    let mut spec = Spectral::new(grid);
    let mut phi = psi.amplitudes().to_vec();
    spec.forward(&mut phi);
    let pw: Vec<f64> = phi.iter().map(|c| c.norm_sqr()).collect();
    let (mean_p, var_p) = momentum_moments(&grid.wavenumbers(), &pw, kernel.hbar());

    let unit: Vec<f64> = density.iter().map(|d| d / norm_sq).collect();
    let mut v = vec![0.0; unit.len()];
    let u_g = Convolver::new(kernel).potential_and_energy(&unit, &mut v);
    Moments {
        mean_x,
        var_x,
        mean_p,
        var_p,
        u_g,
        norm_sq,
    }
}

pub fn compute_density_moments(rho: &DensityMatrix, kernel: &KernelTable) -> Moments {
    let grid = rho.grid();
    let h = grid.spacing();
    let weights = rho.populations();
    let (norm_sq, mean_x, var_x) = position_moments(&grid.positions(), &weights);

    // Momentum populations are the diagonal of F ρ F†.
    let n = grid.n();
    let mut spec = Spectral::new(grid);
    let e = rho.entries();
    let mut half = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for (j, col) in half.iter_mut().enumerate() {
        for (i, c) in col.iter_mut().enumerate() {
            *c = e[(i, j)];
        }
        spec.forward(col);
    }
    // half[j][k] = (F ρ)_{k j}; diag(F ρ F†)_k = Σ_j (Fρ)_{kj} conj(F)_{kj}.
    let mut pw = vec![0.0; n];
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    for (k, p) in pw.iter_mut().enumerate() {
        for j in 0..n {
            row[j] = half[j][k].conj();
        }
        spec.forward(&mut row);
        *p = row[k].re;
    }
    let (mean_p, var_p) = momentum_moments(&grid.wavenumbers(), &pw, kernel.hbar());

    let unit: Vec<f64> = weights.iter().map(|w| w / (h * norm_sq)).collect();
    let mut v = vec![0.0; n];
    let u_g = Convolver::new(kernel).potential_and_energy(&unit, &mut v);
    Moments {
        mean_x,
        var_x,
        mean_p,
        var_p,
        u_g,
        norm_sq,
    }
}
