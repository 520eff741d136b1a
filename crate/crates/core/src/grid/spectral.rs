use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{GridSpec, WaveFunction};
use crate::kernel::KernelTable;

/// FFT plans and wavenumbers for one grid. Owns its scratch; one per evolution.
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    k2: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl Spectral {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            k2: grid.wavenumbers().iter().map(|k| k * k).collect(),
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    pub fn forward(&mut self, data: &mut [Complex64]) {
        self.forward.process_with_scratch(data, &mut self.scratch);
    }

    /// Inverse transform including the `1/n` factor.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        self.inverse.process_with_scratch(data, &mut self.scratch);
        let s = 1.0 / self.n as f64;
        data.iter_mut().for_each(|c| *c *= s);
    }

    pub fn k2(&self) -> &[f64] {
        &self.k2
    }

    /// `exp(-i hbar k^2 dt / 2M)` in FFT order.
    pub fn kinetic_phase(&self, dt: f64, hbar: f64, mass: f64) -> Vec<Complex64> {
        let c = hbar * dt / (2.0 * mass);
        self.k2
            .iter()
            .map(|k2| Complex64::from_polar(1.0, -c * k2))
            .collect()
    }

    /// `exp(-hbar k^2 tau / 2M)` for imaginary-time propagation.
    pub fn kinetic_damping(&self, tau: f64, hbar: f64, mass: f64) -> Vec<Complex64> {
        let c = hbar * tau / (2.0 * mass);
        self.k2
            .iter()
            .map(|k2| Complex64::new((-c * k2).exp(), 0.0))
            .collect()
    }

    /// Multiplies by `factor` in k-space.
    pub fn apply_diagonal(&mut self, data: &mut [Complex64], factor: &[Complex64]) {
        self.forward(data);
        data.iter_mut().zip(factor).for_each(|(d, f)| *d *= f);
        self.inverse(data);
    }
}

/// Zero-padded FFT convolution against a kernel table.
pub struct Convolver {
    n: usize,
    h: f64,
    u0: f64,
    spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Convolver {
    pub fn new(kernel: &KernelTable) -> Self {
        let grid = kernel.grid();
        let p = grid.padded_len();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(p);
        let inverse = planner.plan_fft_inverse(p);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Self {
            n: grid.n(),
            h: grid.spacing(),
            u0: kernel.u0(),
            spectrum: kernel.spectrum().to_vec(),
            forward,
            inverse,
            buf: vec![Complex64::new(0.0, 0.0); p],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
        }
    }

    /// `out_i = Σ_j U(x_i - x_j) density_j h`, with `density` a probability density.
    pub fn potential(&mut self, density: &[f64], out: &mut [f64]) {
        assert_eq!(density.len(), self.n);
        let p = self.buf.len();
        let mass: f64 = density.iter().sum::<f64>() * self.h;
        self.buf
            .iter_mut()
            .for_each(|c| *c = Complex64::new(0.0, 0.0));
        for (b, &d) in self.buf.iter_mut().zip(density) {
            b.re = d;
        }
        self.forward
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        self.buf
            .iter_mut()
            .zip(&self.spectrum)
            .for_each(|(b, s)| *b *= s);
        self.inverse
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = self.h / p as f64;
        for (o, b) in out.iter_mut().zip(&self.buf) {
            *o = self.u0 * mass + b.re * scale;
        }
    }

    /// Pair `(V, U_G)` for a probability density.
    pub fn potential_and_energy(&mut self, density: &[f64], out: &mut [f64]) -> f64 {
        self.potential(density, out);
        out.iter().zip(density).map(|(v, d)| v * d).sum::<f64>() * self.h
    }
}

/// Mean-field potential `∫ U(x - x') |ψ(x')|^2 dx'` via padded convolution.
pub fn mean_field_potential(psi: &WaveFunction, kernel: &KernelTable) -> Vec<f64> {
    let density = psi.density();
    let mut out = vec![0.0; density.len()];
    Convolver::new(kernel).potential(&density, &mut out);
    out
}

/// Same quantity by direct `O(n^2)` summation.
pub fn mean_field_potential_direct(psi: &WaveFunction, kernel: &KernelTable) -> Vec<f64> {
    let density = psi.density();
    let h = psi.grid().spacing();
    (0..density.len())
        .map(|i| {
            density
                .iter()
                .enumerate()
                .map(|(j, d)| kernel.value_between(i, j) * d * h)
                .sum()
        })
        .collect()
}
