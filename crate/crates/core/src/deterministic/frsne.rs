use num_complex::Complex64;

use super::ground::{default_width, PointerState};
use super::sne::{check_grid, Propagator};
use super::{check_stability, EvolutionConfig, SolverError, Trajectory};
use crate::grid::{gaussian_packet, WaveFunction};
use crate::kernel::KernelTable;

/// How the frictional factor `exp(-(V - c) dt / ħ)` is evaluated within a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrictionScheme {
    /// `V` from a half-step predictor and `c` chosen so the factor preserves
    /// the norm exactly. Second order in `dt`.
    #[default]
    Midpoint,
    /// `V` and `c = U_G` both taken at the post-kinetic state. First order;
    /// this is the zero-noise limit of the stochastic wave-function update.
    Frozen,
}

/// The shift `c` with `Σ p h exp(-2 (V - c) τ / ħ) = Σ p h`.
pub(crate) fn normalizing_shift(density: &[f64], v: &[f64], tau: f64, hbar: f64) -> f64 {
    let vmin = v.iter().cloned().fold(f64::INFINITY, f64::min);
    let vmax = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Anchor on the end of the range that keeps the exponents non-positive.
    let anchor = if tau >= 0.0 { vmin } else { vmax };
    let before: f64 = density.iter().sum();
    let after: f64 = density
        .iter()
        .zip(v)
        .map(|(p, v)| p * (-2.0 * (v - anchor) * tau / hbar).exp())
        .sum();
    anchor - hbar / (2.0 * tau) * (after / before).ln()
}

fn damp(amps: &mut [Complex64], v: &[f64], shift: f64, tau: f64, hbar: f64) {
    for (a, v) in amps.iter_mut().zip(v) {
        *a *= (-(v - shift) * tau / hbar).exp();
    }
}

pub fn evolve_frsne(
    psi0: &WaveFunction,
    kernel: &KernelTable,
    cfg: &EvolutionConfig,
) -> Result<Trajectory, SolverError> {
    evolve_frsne_with(psi0, kernel, cfg, FrictionScheme::Midpoint)
}

/// Frictional Schrödinger–Newton evolution: free motion plus the damping
/// `exp(-(V - U_G) t / ħ)`, which drives the state towards its pointer state.
pub fn evolve_frsne_with(
    psi0: &WaveFunction,
    kernel: &KernelTable,
    cfg: &EvolutionConfig,
    scheme: FrictionScheme,
) -> Result<Trajectory, SolverError> {
    check_grid(psi0, kernel)?;
    cfg.validate(kernel.grid())?;
    let mut prop = Propagator::new(kernel, cfg);
    let hbar = prop.hbar;
    let dt = cfg.dt;
    let mut psi = psi0.clone();
    let mut samples = vec![prop.sample(0.0, &psi)];
    let mut predictor = psi.amplitudes().to_vec();

    for step in 1..=cfg.steps {
        prop.kinetic(psi.amplitudes_mut());
        let u_g = prop.mean_field(psi.amplitudes());
        check_stability(step, dt, hbar, &prop.v)?;
        match scheme {
            FrictionScheme::Frozen => {
                damp(psi.amplitudes_mut(), &prop.v, u_g, dt, hbar);
            }
            FrictionScheme::Midpoint => {
                let c = normalizing_shift(&prop.density, &prop.v, 0.5 * dt, hbar);
                predictor.copy_from_slice(psi.amplitudes());
                damp(&mut predictor, &prop.v, c, 0.5 * dt, hbar);
                prop.mean_field(&predictor);
                // `V` now comes from the predictor; the shift must use the
                // density that is actually damped.
                for (d, a) in prop.density.iter_mut().zip(psi.amplitudes()) {
                    *d = a.norm_sqr();
                }
                let c = normalizing_shift(&prop.density, &prop.v, dt, hbar);
                damp(psi.amplitudes_mut(), &prop.v, c, dt, hbar);
            }
        }
        prop.external_phase(psi.amplitudes_mut());
        prop.kinetic(psi.amplitudes_mut());

        if !psi.is_finite() {
            return Err(SolverError::NonFinite(step));
        }
        if cfg.renormalize {
            psi.normalize()?;
        }
        if step % cfg.record_stride == 0 || step == cfg.steps {
            samples.push(prop.sample(step as f64 * dt, &psi));
        }
    }
    Ok(Trajectory {
        samples,
        final_state: psi,
    })
}

/// Options for relaxing into the frictional pointer state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxOptions {
    pub dt: f64,
    /// Time between convergence checks.
    pub check_interval: f64,
    /// Converged once `aligned_distance / check_interval` falls below this.
    pub tol: f64,
    pub max_time: f64,
    pub center: f64,
    pub initial_width: Option<f64>,
}

impl Default for RelaxOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            check_interval: 0.5,
            tol: 1e-8,
            max_time: 200.0,
            center: 0.0,
            initial_width: None,
        }
    }
}

/// Relaxes a real Gaussian under the frictional equation until it stops changing.
pub fn pointer_state_frsne(
    kernel: &KernelTable,
    opts: &RelaxOptions,
) -> Result<PointerState, SolverError> {
    let grid = *kernel.grid();
    let width = opts.initial_width.unwrap_or_else(|| default_width(kernel));
    let mut psi = gaussian_packet(&grid, opts.center, width, 0.0)?;
    let chunk = (opts.check_interval / opts.dt).round().max(1.0) as usize;
    let cfg = EvolutionConfig::new(opts.dt, chunk).with_stride(chunk);
    let max_chunks = (opts.max_time / (chunk as f64 * opts.dt)).ceil() as usize;
    let mut change = f64::INFINITY;
    for i in 1..=max_chunks {
        let next = evolve_frsne(&psi, kernel, &cfg)?.final_state;
        change = next.aligned_distance(&psi) / (chunk as f64 * opts.dt);
        psi = next;
        if change < opts.tol {
            return Ok(PointerState::new(psi, kernel, i * chunk));
        }
    }
    Err(SolverError::NoConvergence {
        iterations: max_chunks * chunk,
        change,
    })
}
