use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

use super::GridSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("packet width {width} is not resolved by spacing {spacing} (need width > 2h)")]
    UnresolvedWidth { width: f64, spacing: f64 },
    #[error("packet centred at {center} with width {width} leaves the domain [-{half}, {half})")]
    OutsideDomain { center: f64, width: f64, half: f64 },
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("amplitude count {got} does not match grid size {expected}")]
    SizeMismatch { expected: usize, got: usize },
}

/// Complex amplitudes on a grid; `Σ |ψ_i|^2 h` is the norm squared.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: GridSpec,
    amps: Vec<Complex64>,
}

impl WaveFunction {
    pub fn new(grid: GridSpec, amps: Vec<Complex64>) -> Result<Self, StateError> {
        if amps.len() != grid.n() {
            return Err(StateError::SizeMismatch {
                expected: grid.n(),
                got: amps.len(),
            });
        }
        Ok(Self { grid, amps })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            amps: vec![Complex64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    pub fn is_finite(&self) -> bool {
        self.amps
            .iter()
            .all(|a| a.re.is_finite() && a.im.is_finite())
    }

    /// Rescales to unit norm and returns the norm squared it had before.
    pub fn normalize(&mut self) -> Result<f64, StateError> {
        let n2 = self.norm_sq();
        if !(n2 > 0.0) || !n2.is_finite() {
            return Err(StateError::ZeroNorm);
        }
        let s = 1.0 / n2.sqrt();
        self.amps.iter_mut().for_each(|a| *a *= s);
        Ok(n2)
    }

    /// `|ψ_i|^2`.
    pub fn density(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<self|other> = Σ conj(self_i) other_i h`.
    pub fn inner(&self, other: &WaveFunction) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.spacing()
    }

    pub fn distance(&self, other: &WaveFunction) -> f64 {
        (self
            .amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum::<f64>()
            * self.grid.spacing())
        .sqrt()
    }

    /// L² distance after normalising both states and removing the optimal global phase.
    pub fn aligned_distance(&self, other: &WaveFunction) -> f64 {
        let na = self.norm_sq().sqrt();
        let nb = other.norm_sq().sqrt();
        let overlap = self.inner(other);
        // min_φ ||a/na - e^{iφ} b/nb||² = 2 - 2|<a|b>|/(na nb)
        (2.0 - 2.0 * overlap.norm() / (na * nb)).max(0.0).sqrt()
    }

    /// Circular shift by `cells` grid points (positive moves the state right).
    pub fn shifted(&self, cells: isize) -> WaveFunction {
        let n = self.amps.len() as isize;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let j = (i as isize + cells).rem_euclid(n) as usize;
            out[j] = *a;
        }
        WaveFunction {
            grid: self.grid,
            amps: out,
        }
    }

    /// Norm carried by points with `x < split` and `x >= split`.
    pub fn window_norms(&self, split: f64) -> (f64, f64) {
        let h = self.grid.spacing();
        let mut left = 0.0;
        let mut right = 0.0;
        for (i, a) in self.amps.iter().enumerate() {
            if self.grid.x(i) < split {
                left += a.norm_sqr() * h;
            } else {
                right += a.norm_sqr() * h;
            }
        }
        (left, right)
    }

    pub fn mean_x(&self) -> f64 {
        let h = self.grid.spacing();
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| self.grid.x(i) * a.norm_sqr() * h)
            .sum::<f64>()
            / self.norm_sq()
    }

    pub fn var_x(&self) -> f64 {
        let h = self.grid.spacing();
        let m = self.mean_x();
        self.amps
            .iter()
            .enumerate()
            .map(|(i, a)| (self.grid.x(i) - m).powi(2) * a.norm_sqr() * h)
            .sum::<f64>()
            / self.norm_sq()
    }
}

fn check_packet(grid: &GridSpec, center: f64, width: f64) -> Result<(), StateError> {
    let h = grid.spacing();
    if !(width > 2.0 * h) {
        return Err(StateError::UnresolvedWidth { width, spacing: h });
    }
    let half = 0.5 * grid.length();
    if center - 6.0 * width < -half || center + 6.0 * width > half {
        return Err(StateError::OutsideDomain {
            center,
            width,
            half,
        });
    }
    Ok(())
}

/// Normalised `exp(-(x - c)^2 / (4 w^2) + i k x)`; `w` is the position standard deviation.
pub fn gaussian_packet(
    grid: &GridSpec,
    center: f64,
    width: f64,
    wavenumber: f64,
) -> Result<WaveFunction, StateError> {
    check_packet(grid, center, width)?;
    let a = Complex64::new(1.0 / (4.0 * width * width), 0.0);
    gaussian_with_exponent(grid, center, a, wavenumber)
}

/// Normalised `exp(-a (x - c)^2 + i k x)` for complex `a` with `Re a > 0`.
pub fn gaussian_with_exponent(
    grid: &GridSpec,
    center: f64,
    a: Complex64,
    wavenumber: f64,
) -> Result<WaveFunction, StateError> {
    let amps = (0..grid.n())
        .map(|i| {
            let x = grid.x(i);
            let u = x - center;
            (-a * u * u + Complex64::new(0.0, wavenumber * x)).exp()
        })
        .collect();
    let mut psi = WaveFunction { grid: *grid, amps };
    psi.normalize()?;
    Ok(psi)
}

/// Balanced superposition of two packets at `±separation / 2`, renormalised.
pub fn cat_state(grid: &GridSpec, separation: f64, width: f64) -> Result<WaveFunction, StateError> {
    let left = gaussian_packet(grid, -0.5 * separation, width, 0.0)?;
    let right = gaussian_packet(grid, 0.5 * separation, width, 0.0)?;
    let amps = left
        .amps
        .iter()
        .zip(&right.amps)
        .map(|(a, b)| a + b)
        .collect();
    let mut psi = WaveFunction { grid: *grid, amps };
    psi.normalize()?;
    Ok(psi)
}

/// Dense `ρ(x_i, x_j)`; `Σ ρ_ii h` is the trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    grid: GridSpec,
    entries: DMatrix<Complex64>,
}

impl DensityMatrix {
    pub fn from_pure(psi: &WaveFunction) -> Self {
        let a = psi.amplitudes();
        let n = a.len();
        Self {
            grid: *psi.grid(),
            entries: DMatrix::from_fn(n, n, |i, j| a[i] * a[j].conj()),
        }
    }

    /// Incoherent mixture `Σ w_k |ψ_k><ψ_k|`.
    pub fn mixture(states: &[(f64, WaveFunction)]) -> Self {
        let grid = *states[0].1.grid();
        let n = grid.n();
        let mut entries = DMatrix::zeros(n, n);
        for (w, psi) in states {
            let a = psi.amplitudes();
            for j in 0..n {
                for i in 0..n {
                    entries[(i, j)] += a[i] * a[j].conj() * *w;
                }
            }
        }
        Self { grid, entries }
    }

    pub fn from_entries(grid: GridSpec, entries: DMatrix<Complex64>) -> Self {
        assert_eq!(entries.nrows(), grid.n());
        assert_eq!(entries.ncols(), grid.n());
        Self { grid, entries }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut DMatrix<Complex64> {
        &mut self.entries
    }

    pub fn trace(&self) -> f64 {
        (0..self.grid.n())
            .map(|i| self.entries[(i, i)].re)
            .sum::<f64>()
            * self.grid.spacing()
    }

    /// `Tr ρ^2 = Σ |ρ_ij|^2 h^2`.
    pub fn purity(&self) -> f64 {
        let h = self.grid.spacing();
        self.entries.iter().map(|c| c.norm_sqr()).sum::<f64>() * h * h
    }

    /// `ρ(x_i, x_i) h`, the occupation of each cell.
    pub fn populations(&self) -> Vec<f64> {
        let h = self.grid.spacing();
        (0..self.grid.n())
            .map(|i| self.entries[(i, i)].re * h)
            .collect()
    }

    /// Largest `|ρ_ij - conj(ρ_ji)|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.grid.n();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Copies the upper triangle onto the lower one so `ρ = ρ†` holds bitwise.
    pub fn hermitize(&mut self) {
        let n = self.grid.n();
        for j in 0..n {
            let d = self.entries[(j, j)];
            self.entries[(j, j)] = Complex64::new(d.re, 0.0);
            for i in 0..j {
                let v = self.entries[(i, j)];
                self.entries[(j, i)] = v.conj();
            }
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.entries.iter_mut().for_each(|c| *c *= s);
    }

    /// Smallest eigenvalue of the operator `ρ h` (dimensionless).
    pub fn min_eigenvalue(&self) -> f64 {
        let h = self.grid.spacing();
        let m = self.entries.map(|c| c * h);
        let eig = nalgebra::SymmetricEigen::new(m);
        eig.eigenvalues
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn mean_x(&self) -> f64 {
        let p = self.populations();
        p.iter()
            .enumerate()
            .map(|(i, w)| self.grid.x(i) * w)
            .sum::<f64>()
            / p.iter().sum::<f64>()
    }

    /// Occupation left and right of `split`.
    pub fn window_norms(&self, split: f64) -> (f64, f64) {
        let mut left = 0.0;
        let mut right = 0.0;
        for (i, w) in self.populations().into_iter().enumerate() {
            if self.grid.x(i) < split {
                left += w;
            } else {
                right += w;
            }
        }
        (left, right)
    }
}
