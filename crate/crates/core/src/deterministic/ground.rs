use num_complex::Complex64;

use super::analytic::GaussianMoments;
use super::sne::Propagator;
use super::{EvolutionConfig, SolverError};
use crate::grid::{gaussian_packet, WaveFunction};
use crate::kernel::KernelTable;

/// A converged stationary state and its summary numbers.
#[derive(Debug, Clone)]
pub struct PointerState {
    pub state: WaveFunction,
    pub var_x: f64,
    /// Best-fit Gaussian exponent `a` in `exp(-a (x - c)^2)`.
    pub exponent: Complex64,
    pub energy: f64,
    pub iterations: usize,
}

impl PointerState {
    pub(crate) fn new(state: WaveFunction, kernel: &KernelTable, iterations: usize) -> Self {
        let m = GaussianMoments::of_state(&state, kernel.hbar());
        let energy = super::energy(&state, kernel, None);
        Self {
            var_x: m.var_x,
            exponent: m.exponent(kernel.hbar()),
            energy,
            iterations,
            state,
        }
    }

    /// Oscillator-length parameter `sqrt(2 var_x)`.
    pub fn oscillator_length(&self) -> f64 {
        (2.0 * self.var_x).sqrt()
    }
}

/// Starting width: the oscillator ground state when the kernel has a
/// quadratic core, otherwise a twentieth of the box.
pub(crate) fn default_width(kernel: &KernelTable) -> f64 {
    let grid = kernel.grid();
    let fallback = grid.length() / 20.0;
    let w = match kernel.omega_g() {
        Some(w) if w > 0.0 => 1.5 * (kernel.hbar() / (2.0 * kernel.mass() * w)).sqrt(),
        _ => fallback,
    };
    w.clamp(3.0 * grid.spacing(), grid.length() / 14.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    pub dtau: f64,
    pub max_iter: usize,
    /// Bound on the relative change of `E - U(0)/2` between checks. The state
    /// itself must also move by less than `sqrt(tol)` per unit imaginary time.
    pub tol: f64,
    pub check_every: usize,
    pub center: f64,
    pub initial_width: Option<f64>,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            dtau: 1e-2,
            max_iter: 200_000,
            tol: 1e-10,
            check_every: 10,
            center: 0.0,
            initial_width: None,
        }
    }
}

/// Schrödinger–Newton ground state by normalised imaginary-time propagation.
///
/// The energy is measured from `U(0)/2`, since the constant offset alone can
/// be many orders of magnitude larger than the binding energy.
pub fn ground_state_sne(
    kernel: &KernelTable,
    opts: &GroundStateOptions,
) -> Result<PointerState, SolverError> {
    if !(opts.dtau > 0.0 && opts.dtau.is_finite()) {
        return Err(SolverError::BadConfig(format!(
            "dtau must be positive, got {}",
            opts.dtau
        )));
    }
    let grid = *kernel.grid();
    let width = opts.initial_width.unwrap_or_else(|| default_width(kernel));
    let mut psi = gaussian_packet(&grid, opts.center, width, 0.0)?;
    let mut prop = Propagator::new(kernel, &EvolutionConfig::new(opts.dtau, 0));
    let damping = prop
        .spec
        .kinetic_damping(0.5 * opts.dtau, kernel.hbar(), kernel.mass());
    let offset = 0.5 * kernel.u0();
    let c = opts.dtau / kernel.hbar();
    let mut last = prop.energy(psi.amplitudes()) - offset;
    let mut change = f64::INFINITY;
    let mut previous = psi.clone();
    let span = opts.check_every.max(1) as f64 * opts.dtau;

    for it in 1..=opts.max_iter {
        prop.spec.apply_diagonal(psi.amplitudes_mut(), &damping);
        prop.mean_field_normalized(psi.amplitudes());
        let vmin = prop.v.iter().cloned().fold(f64::INFINITY, f64::min);
        for (a, v) in psi.amplitudes_mut().iter_mut().zip(&prop.v) {
            *a *= (-(v - vmin) * c).exp();
        }
        prop.spec.apply_diagonal(psi.amplitudes_mut(), &damping);
        psi.normalize()?;
        if !psi.is_finite() {
            return Err(SolverError::NonFinite(it));
        }
        if it % opts.check_every.max(1) == 0 {
            let e = prop.energy(psi.amplitudes()) - offset;
            let de = ((e - last) / e.abs().max(f64::MIN_POSITIVE)).abs();
            let drift = psi.aligned_distance(&previous) / span;
            last = e;
            previous.amplitudes_mut().copy_from_slice(psi.amplitudes());
            change = de.max(drift * drift);
            if change < opts.tol {
                return Ok(PointerState::new(psi, kernel, it));
            }
        }
    }
    Err(SolverError::NoConvergence {
        iterations: opts.max_iter,
        change,
    })
}
