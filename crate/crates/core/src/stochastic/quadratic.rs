use rand::Rng;
use rand_distr::StandardNormal;

use super::noise::trajectory_rng;
use super::{StochasticConfig, StochasticError, TrajectoryRecord};
use crate::deterministic::{check_grid, Propagator, SolverError};
use crate::grid::WaveFunction;
use crate::kernel::KernelTable;

/// Continuous position monitoring at rate `γ = M ω² / ħ`, the quadratic-core
/// limit of the field noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticNoise {
    pub gamma: f64,
    /// Coupling of the scalar Wiener increment, `sqrt(γ)`.
    pub coupling: f64,
}

impl QuadraticNoise {
    pub fn new(mass: f64, omega: f64, hbar: f64) -> Self {
        let gamma = mass * omega * omega / hbar;
        Self {
            gamma,
            coupling: gamma.sqrt(),
        }
    }

    pub fn from_kernel(kernel: &KernelTable) -> Result<Self, StochasticError> {
        let w = kernel.omega_g().ok_or(StochasticError::NoFrequency)?;
        Ok(Self::new(kernel.mass(), w, kernel.hbar()))
    }
}

/// Per step: half kinetic step; with `u = x - <x>`, multiply by
/// `exp(-γ u² dt / 2) · exp(c u Δw - c² u² dt / 2)`; renormalise; half kinetic step.
pub fn evolve_quadratic_stochastic(
    psi0: &WaveFunction,
    kernel: &KernelTable,
    noise: QuadraticNoise,
    cfg: &StochasticConfig,
    seed: u64,
    index: u64,
) -> Result<TrajectoryRecord, StochasticError> {
    let mut rng = trajectory_rng(seed, index);
    let sd = cfg.evolution.dt.abs().sqrt();
    let mut rec = evolve_quadratic_stochastic_driven(psi0, kernel, noise, cfg, || {
        rng.sample::<f64, _>(StandardNormal) * sd
    })?;
    rec.seed = seed;
    rec.index = index;
    Ok(rec)
}

/// The same update with each step's Wiener increment `Δw` supplied by
/// `increments`. The record carries seed and index 0.
pub fn evolve_quadratic_stochastic_driven(
    psi0: &WaveFunction,
    kernel: &KernelTable,
    noise: QuadraticNoise,
    cfg: &StochasticConfig,
    mut increments: impl FnMut() -> f64,
) -> Result<TrajectoryRecord, StochasticError> {
    check_grid(psi0, kernel)?;
    let ev = &cfg.evolution;
    ev.validate(kernel.grid())?;
    let grid = *kernel.grid();
    let x = grid.positions();
    let dt = ev.dt;
    let c = noise.coupling * cfg.noise_scale;
    let mut prop = Propagator::new(kernel, ev);
    let mut psi = psi0.clone();
    psi.normalize()?;
    let mut samples = vec![prop.sample(0.0, &psi)];
    let mut max_norm_drift: f64 = 0.0;

    for step in 1..=ev.steps {
        prop.kinetic(psi.amplitudes_mut());
        let m = psi.mean_x();
        let dw = increments();
        for (a, x) in psi.amplitudes_mut().iter_mut().zip(&x) {
            let u = x - m;
            let log_f = -0.5 * noise.gamma * u * u * dt + c * u * dw - 0.5 * c * c * u * u * dt;
            *a *= log_f.exp();
        }
        prop.external_phase(psi.amplitudes_mut());
        let pre = psi.normalize()?;
        max_norm_drift = max_norm_drift.max((pre - 1.0).abs());
        prop.kinetic(psi.amplitudes_mut());
        if !psi.is_finite() {
            return Err(SolverError::NonFinite(step).into());
        }
        if step % ev.record_stride == 0 || step == ev.steps {
            samples.push(prop.sample(step as f64 * dt, &psi));
        }
    }
    Ok(TrajectoryRecord {
        seed: 0,
        index: 0,
        samples,
        collapse_time: None,
        branch: None,
        final_state: cfg.keep_final_state.then_some(psi),
        max_norm_drift,
    })
}
