use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{EvolutionConfig, Sample, SolverError};
use crate::grid::{compute_density_moments, DensityMatrix, Spectral};
use crate::kernel::KernelTable;

/// Eigenvalues of `ρ h` below this count as a positivity violation.
const POSITIVITY_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct DensityTrajectory {
    pub samples: Vec<Sample>,
    pub final_state: DensityMatrix,
    /// Recorded samples at which `ρ` had an eigenvalue below `-1e-6`.
    pub positivity_warnings: usize,
    pub min_eigenvalue: f64,
}

/// `ρ ← K ρ K†` for a diagonal-in-k operator `K`.
pub(crate) fn sandwich(spec: &mut Spectral, rho: &mut DMatrix<Complex64>, factor: &[Complex64]) {
    let n = rho.nrows();
    for mut col in rho.column_iter_mut() {
        let data = col.as_mut_slice();
        spec.apply_diagonal(data, factor);
    }
    let mut row = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..n {
        for (l, r) in row.iter_mut().enumerate() {
            *r = rho[(i, l)].conj();
        }
        spec.apply_diagonal(&mut row, factor);
        for (l, r) in row.iter().enumerate() {
            rho[(i, l)] = r.conj();
        }
    }
}

pub(crate) fn density_sample(t: f64, rho: &DensityMatrix, kernel: &KernelTable) -> Sample {
    let m = compute_density_moments(rho, kernel);
    let kinetic = (m.var_p + m.mean_p * m.mean_p) / (2.0 * kernel.mass());
    Sample {
        t,
        norm: m.norm_sq,
        mean_x: m.mean_x,
        var_x: m.var_x,
        energy: kinetic + 0.5 * m.u_g,
        purity: Some(rho.purity() / (m.norm_sq * m.norm_sq)),
    }
}

/// Newtonian-noise master equation: free motion on both sides plus the
/// pointwise decay `ρ(x, y) exp(-(U(x - y) - U(0)) t / ħ)`.
///
/// The density matrix is re-Hermitised each step. Positivity is checked at
/// recorded samples only; a violation is logged and counted, not fatal.
pub fn evolve_vnne(
    rho0: &DensityMatrix,
    kernel: &KernelTable,
    cfg: &EvolutionConfig,
) -> Result<DensityTrajectory, SolverError> {
    if rho0.grid() != kernel.grid() {
        return Err(SolverError::GridMismatch);
    }
    let grid = *kernel.grid();
    cfg.validate(&grid)?;
    let n = grid.n();
    let hbar = kernel.hbar();
    let mut spec = Spectral::new(&grid);
    let half = (!cfg.freeze_kinetic).then(|| spec.kinetic_phase(0.5 * cfg.dt, hbar, kernel.mass()));
    let decay: Vec<f64> = (0..n)
        .map(|m| (-kernel.excess_between(m, 0) * cfg.dt / hbar).exp())
        .collect();
    let ext_phase: Option<Vec<Complex64>> = match (&cfg.external_potential, cfg.freeze_kinetic) {
        (Some(v), false) => Some(
            v.iter()
                .map(|v| Complex64::from_polar(1.0, -v * cfg.dt / hbar))
                .collect(),
        ),
        _ => None,
    };

    let mut rho = rho0.clone();
    let trace0 = rho.trace();
    let mut samples = vec![density_sample(0.0, &rho, kernel)];
    let mut positivity_warnings = 0;
    let mut min_eigenvalue = rho.min_eigenvalue();

    for step in 1..=cfg.steps {
        if let Some(k) = &half {
            sandwich(&mut spec, rho.entries_mut(), k);
        }
        let e = rho.entries_mut();
        for j in 0..n {
            for i in 0..n {
                let mut f = Complex64::new(decay[i.abs_diff(j)], 0.0);
                if let Some(p) = &ext_phase {
                    f *= p[i] * p[j].conj();
                }
                e[(i, j)] *= f;
            }
        }
        if let Some(k) = &half {
            sandwich(&mut spec, rho.entries_mut(), k);
        }
        rho.hermitize();
        if rho
            .entries()
            .iter()
            .any(|c| !c.re.is_finite() || !c.im.is_finite())
        {
            return Err(SolverError::NonFinite(step));
        }
        let tr = rho.trace();
        if cfg.renormalize {
            rho.scale(trace0 / tr);
        } else if (tr - trace0).abs() > 1e-6 {
            return Err(SolverError::NormDrift {
                step,
                drift: (tr - trace0).abs(),
            });
        }
        if step % cfg.record_stride == 0 || step == cfg.steps {
            samples.push(density_sample(step as f64 * cfg.dt, &rho, kernel));
            min_eigenvalue = rho.min_eigenvalue();
            if min_eigenvalue < -POSITIVITY_TOL {
                positivity_warnings += 1;
                log::warn!(
                    "density matrix lost positivity at step {step}: λ_min = {min_eigenvalue:.3e}"
                );
            }
        }
    }
    Ok(DensityTrajectory {
        samples,
        final_state: rho,
        positivity_warnings,
        min_eigenvalue,
    })
}
