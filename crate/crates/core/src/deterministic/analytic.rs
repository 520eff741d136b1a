//! Closed-form Gaussian stationary states of the quadratic-regime dynamics.
//!
//! States are written as `exp(-a (x - c)^2)` with complex `a`.

use num_complex::Complex64;

use crate::grid::{Spectral, WaveFunction};

/// Ground state of the mean-field oscillator with frequency `omega`.
pub fn harmonic_ground_exponent(mass: f64, omega: f64, hbar: f64) -> Complex64 {
    Complex64::new(mass * omega / (2.0 * hbar), 0.0)
}

/// Stationary state under purely frictional self-gravity:
/// `a = sqrt(-i) M ω / (2 ħ)`, so `var_x = ħ / (sqrt(2) M ω)`.
pub fn frictional_pointer_exponent(mass: f64, omega: f64, hbar: f64) -> Complex64 {
    let sqrt_minus_i = Complex64::new(1.0, -1.0) / 2f64.sqrt();
    sqrt_minus_i * mass * omega / (2.0 * hbar)
}

/// Stationary conditional state of the continuously monitored oscillator:
/// `a = (1 - i) M ω / (2 ħ)`, so `var_x = ħ / (2 M ω)` with `<{x - c, p}>/2 = ħ/2`.
pub fn conditional_pointer_exponent(mass: f64, omega: f64, hbar: f64) -> Complex64 {
    Complex64::new(1.0, -1.0) * mass * omega / (2.0 * hbar)
}

/// Second moments of a Gaussian, centred on its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianMoments {
    pub var_x: f64,
    /// `Re <(x - <x>)(p - <p>)>`, the symmetrised covariance.
    pub cov_xp: f64,
    pub var_p: f64,
}

impl GaussianMoments {
    pub fn from_exponent(a: Complex64, hbar: f64) -> Self {
        let var_x = 0.25 / a.re;
        Self {
            var_x,
            cov_xp: -2.0 * hbar * a.im * var_x,
            var_p: hbar * hbar * a.norm_sqr() / a.re,
        }
    }

    /// Inverse of [`GaussianMoments::from_exponent`] using `var_x` and `cov_xp`.
    pub fn exponent(&self, hbar: f64) -> Complex64 {
        Complex64::new(0.25 / self.var_x, -self.cov_xp / (2.0 * hbar * self.var_x))
    }

    /// Measures the centred moments of a grid state.
    pub fn of_state(psi: &WaveFunction, hbar: f64) -> Self {
        let grid = psi.grid();
        let h = grid.spacing();
        let norm = psi.norm_sq();
        let mx = psi.mean_x();
        let var_x = psi.var_x();
        let mut spec = Spectral::new(grid);
        let k = grid.wavenumbers();
        let mut phi = psi.amplitudes().to_vec();
        spec.forward(&mut phi);
        let total: f64 = phi.iter().map(|c| c.norm_sqr()).sum();
        let mp = phi
            .iter()
            .zip(&k)
            .map(|(c, k)| c.norm_sqr() * k)
            .sum::<f64>()
            / total;
        let var_k = phi
            .iter()
            .zip(&k)
            .map(|(c, k)| c.norm_sqr() * (k - mp).powi(2))
            .sum::<f64>()
            / total;
        // Spectral derivative for <x p>.
        phi.iter_mut()
            .zip(&k)
            .for_each(|(c, k)| *c *= Complex64::new(0.0, *k));
        spec.inverse(&mut phi);
        let xp: Complex64 = psi
            .amplitudes()
            .iter()
            .zip(&phi)
            .enumerate()
            .map(|(i, (a, d))| a.conj() * (grid.x(i) - mx) * Complex64::new(0.0, -hbar) * d)
            .sum::<Complex64>()
            * h
            / norm;
        Self {
            var_x,
            cov_xp: xp.re,
            var_p: hbar * hbar * var_k,
        }
    }
}
